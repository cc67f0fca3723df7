use super::ForecastError;

/// Chronological one-step forecast errors (measured − forecast) with cached
/// moments and autocorrelation table.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastErrorStore {
    errors: Vec<f64>,
    max_lag: usize,
    mean: f64,
    std: f64,
    table: Vec<f64>,
}

impl ForecastErrorStore {
    pub fn new(max_lag: usize) -> Self {
        ForecastErrorStore { errors: Vec::new(), max_lag, mean: 0.0, std: 0.0, table: vec![1.0] }
    }

    pub fn from_errors(max_lag: usize, errors: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Self::new(max_lag);
        s.errors.extend(errors);
        s.refresh();
        s
    }

    pub fn push(&mut self, e: f64) {
        self.errors.push(e);
        self.refresh();
    }

    pub fn extend(&mut self, es: impl IntoIterator<Item = f64>) {
        self.errors.extend(es);
        self.refresh();
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    /// Cached `R_ee(l)` for `l = 0..=max_lag` (lags the store cannot support
    /// yet are 0).
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    fn refresh(&mut self) {
        let n = self.errors.len();
        if n == 0 {
            return;
        }
        self.mean = self.errors.iter().sum::<f64>() / n as f64;
        let var = self.errors.iter().map(|e| (e - self.mean).powi(2)).sum::<f64>() / n as f64;
        self.std = var.sqrt();
        self.table = (0..=self.max_lag).map(|l| self.compute(l).unwrap_or(0.0)).collect();
    }

    fn compute(&self, lag: usize) -> Option<f64> {
        let n = self.errors.len();
        if n <= lag + 2 {
            return None;
        }
        if lag == 0 {
            return Some(1.0);
        }
        let var = self.std * self.std;
        if var <= 1e-300 {
            return Some(0.0);
        }
        let c: f64 = (0..n - lag).map(|t| (self.errors[t] - self.mean) * (self.errors[t + lag] - self.mean)).sum();
        Some(c / (n as f64 * var))
    }
}

/// Biased empirical autocorrelation of the stored errors at `lag`.
pub fn autocorr(store: &ForecastErrorStore, lag: usize) -> Result<f64, ForecastError> {
    if lag <= store.max_lag && store.len() > lag + 2 {
        return Ok(store.table[lag]);
    }
    store.compute(lag).ok_or(ForecastError::ShortStore { len: store.len(), lag })
}

/// Shifts a fresh forecast by the last one-step error scaled with the error
/// autocorrelation at each lead; `raw[k]` is `k + 1` steps ahead.
pub fn correct_forecast(raw: &[f64], prev_error: f64, store: &ForecastErrorStore) -> Vec<f64> {
    raw.iter().enumerate().map(|(k, v)| (v + prev_error * store.table.get(k + 1).copied().unwrap_or(0.0)).max(0.0)).collect()
}

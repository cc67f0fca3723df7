//! Day-ahead frequency-regulation reserves from a heat pump with a buffer tank.
//!
//! * [`params`]: constants, uncertainty boxes and the discrete tank model.
//! * [`robust`]: robust scheduling problems and their MILP counterparts.
//! * [`forecast`]: demand forecasting with error correction.
//! * [`plant`]: simulated tank, heat pump, regulation signal and demand.
//! * [`control`]: the three control levels run against the plant.
//! * [`scoring`]: tracking scores and flexibility accounting.

pub mod control;
pub mod forecast;
pub mod params;
pub mod plant;
pub mod robust;
pub mod scoring;

pub mod analytics;
pub mod geom;
pub mod service;
pub mod session;
pub mod task;
pub mod trainee;

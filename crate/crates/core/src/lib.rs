pub mod assignment;
pub mod association;
pub mod curvefit;
pub mod geometry;
pub mod instance;
pub mod mapstore;
pub mod metrics;
pub mod pipeline;
pub mod polygon;
pub mod render;
pub mod synth;

pub mod fields;
pub mod cartan;
pub mod series;
pub mod poly;
pub mod report;
pub mod kkt;
pub mod sergeev;
pub mod qhc;
pub mod bubbles;
pub mod runner;

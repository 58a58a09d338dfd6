pub mod controller;
pub mod decision;
pub mod llm_client;
pub mod memory;
pub mod metrics;
pub mod perception;
pub mod priors;
pub mod runner;
pub mod world;

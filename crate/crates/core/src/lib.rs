pub mod cli;
pub mod ctmc;
pub mod fta;
pub mod gcl;
pub mod odrisk;
pub mod polyrat;
pub mod solver;
pub mod stats;

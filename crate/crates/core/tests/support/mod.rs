pub mod gen;
pub mod oracles;
pub mod fixtures;

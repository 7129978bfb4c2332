pub mod linalg;
pub mod mvee;
pub mod tensor;
pub mod caratheodory;
pub mod sketch;
pub mod psdrank;
pub mod lift;
pub mod cli;

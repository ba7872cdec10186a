pub mod analysis;
pub mod corpus;
pub mod gateway;
pub mod judge;
pub mod pipeline;
pub mod prompting;
pub mod similarity;

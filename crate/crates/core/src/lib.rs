pub mod gf2;
pub mod protocol;
pub mod quantum;
pub mod rates;

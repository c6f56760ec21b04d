#![allow(dead_code)]

pub mod admissibility;
pub mod l1;
pub mod oracle;

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod construct;
pub mod lvalues;
pub mod newform;
pub mod period;
pub mod rootfind;
pub mod specfun;

//! The nine-state running example with its smiley and frowny sinks.

use super::{parse_model, Pomdp, Specification};
use crate::scalar::Scalar;

/// State ids of the running example.
pub mod states {
    pub const S0: usize = 0;
    pub const S1: usize = 1;
    pub const S2: usize = 2;
    pub const S3: usize = 3;
    pub const S4: usize = 4;
    pub const S5: usize = 5;
    pub const S6: usize = 6;
    pub const SMILE: usize = 7;
    pub const FROWN: usize = 8;

    pub const A: usize = 0;
    pub const B: usize = 1;

    /// Observation ids: {s0,s5,s6}, {s1,s2}, {s3,s4}, smile, frown.
    pub const Z0: usize = 0;
    pub const Z1: usize = 1;
    pub const Z2: usize = 2;
    pub const Z_SMILE: usize = 3;
    pub const Z_FROWN: usize = 4;
}

const TEXT: &str = "\
# running example: reach the frowny state with maximal probability
pomdp 9 2 5
actions a b
init 0
obs 0 0
obs 5 0
obs 6 0
obs 1 1
obs 2 1
obs 3 2
obs 4 2
obs 7 3
obs 8 4
tr 0 a 0 1/5
tr 0 a 1 3/5
tr 0 a 2 1/5
tr 0 b 0 1/2
tr 0 b 5 1/6
tr 0 b 6 1/3
tr 5 a 1 1
tr 5 b 5 1/4
tr 5 b 6 3/4
tr 6 a 2 1
tr 6 b 5 2/3
tr 6 b 6 1/3
tr 1 a 3 1
tr 1 b 3 2/3
tr 1 b 4 1/3
tr 2 a 3 3/4
tr 2 a 4 1/4
tr 2 b 4 1
tr 3 a 7 2/5
tr 3 a 8 3/5
tr 3 b 7 1
tr 4 a 7 3/4
tr 4 a 8 1/4
tr 4 b 8 1
tr 7 a 7 1
tr 7 b 7 1
tr 8 a 8 1
tr 8 b 8 1
label target 8
spec max Preach
";

pub fn running_example_text() -> &'static str {
    TEXT
}

pub fn make_running_example<T: Scalar>() -> (Pomdp<T>, Specification<T>) {
    parse_model(TEXT).expect("running example is well-formed")
}

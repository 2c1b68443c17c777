//! Holds the `acceptance` test target. It runs after the unit and
//! integration tests of the other crates.

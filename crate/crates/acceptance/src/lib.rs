//! Holds the `acceptance` test target and its fixtures; no library code.
//!
//! Run with `cargo test -p sbfl-acceptance --test acceptance`. Each
//! criterion prints one `PASS` or `FAIL` line and the target exits non-zero
//! if any fails.

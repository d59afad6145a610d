//! Holds the acceptance suite under `tests/`; run it with `cargo test -p mite-tests`.

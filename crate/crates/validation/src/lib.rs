//! Hosts the `acceptance` test target. Run it with
//! `cargo test -p toepexp-validation --test acceptance`.

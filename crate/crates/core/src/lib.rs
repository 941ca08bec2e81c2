//! Workbench for attacking and defending offline writer-independent
//! signature verification.
//!
//! The pipeline mirrors a desk setup: scanned signatures are preprocessed
//! ([`raster`]), traced into centerline vectors ([`vectorize`]), compiled to
//! pen-plotter G-code and re-drawn by a plotter simulator ([`gcode`]). A
//! from-scratch convolutional verifier ([`verify`]) is trained on the
//! genuine/forged corpus, a conditional GAN ([`cgan`]) learns to forge
//! signatures digitally, and the [`harness`] runs the end-to-end attack and
//! defense experiments, reporting false-acceptance rates before and after
//! one-epoch fine-tuning.
//!
//! Everything is deterministic given a seed: the only randomness source is
//! the [`rng::SplitMix64`] generator, so runs reproduce bit-for-bit across
//! platforms.

pub mod cgan;
pub mod gcode;
pub mod harness;
pub mod kv;
pub mod raster;
pub mod rng;
pub mod vectorize;
pub mod verify;

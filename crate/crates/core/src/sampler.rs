//! Three-phase block-Gibbs sampling.
//!
//! One sweep draws `h ~ p(h | x)` with the subspace units summed out, then
//! `S ~ p(S | x, h)`, then `x ~ p(x | h, S)`. Within a phase every variable
//! gets exactly one uniform draw, visited in index order, so a chain is
//! bit-reproducible from its seed.

use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ActivationCache, ModelParams};

/// Random source for one chain: ChaCha8 keyed by a seed, with independent
/// streams selected by a stream id.
pub type ChainRng = ChaCha8Rng;

/// Stream of a seed used for the per-epoch minibatch shuffle.
pub const SHUFFLE_STREAM: u64 = 0;
/// Stream of a seed used by the training Gibbs chains.
pub const CHAIN_STREAM: u64 = 1;
/// Stream of a seed used to cut the training and validation sets.
pub const SPLIT_STREAM: u64 = 2;
/// Stream of a seed used for initial weights.
pub const INIT_STREAM: u64 = 3;

pub fn chain_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn bernoulli<R: RngCore + ?Sized>(p: f64, rng: &mut R) -> u8 {
    u8::from(uniform(rng) < p)
}

pub fn bernoulli_vec<R: RngCore + ?Sized>(probs: &[f64], rng: &mut R) -> Vec<u8> {
    probs.iter().map(|&p| bernoulli(p, rng)).collect()
}

/// One joint configuration `(x, h, S)`; `s` is `M × K` row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GibbsState {
    pub x: Vec<u8>,
    pub h: Vec<u8>,
    pub s: Vec<u8>,
}

pub fn sample_h_given_x<R: RngCore + ?Sized>(p: &ModelParams, x: &[u8], rng: &mut R) -> Result<Vec<u8>> {
    Ok(bernoulli_vec(&p.prob_h_given_x(x)?, rng))
}

pub fn sample_s_given_xh<R: RngCore + ?Sized>(p: &ModelParams, x: &[u8], h: &[u8], rng: &mut R) -> Result<Vec<u8>> {
    Ok(bernoulli_vec(&p.prob_s_given_xh(x, h)?, rng))
}

pub fn sample_x_given_hs<R: RngCore + ?Sized>(p: &ModelParams, h: &[u8], s: &[u8], rng: &mut R) -> Result<Vec<u8>> {
    Ok(bernoulli_vec(&p.prob_x_given_hs(h, s)?, rng))
}

/// One full sweep from `x`, reusing the activations of `x` for the first two
/// phases. Draw order matches calling the three `sample_*` functions in turn.
pub(crate) fn sweep<R: RngCore + ?Sized>(p: &ModelParams, cache: &ActivationCache, rng: &mut R) -> GibbsState {
    let h = bernoulli_vec(&p.prob_h_from(cache), rng);
    let s = bernoulli_vec(&cache.prob_s(&h), rng);
    let x = bernoulli_vec(&p.prob_x_given_hs(&h, &s).expect("shapes fixed by the model"), rng);
    GibbsState { x, h, s }
}

/// Runs `steps` sweeps starting from `x0` and returns the final state.
pub fn gibbs_chain<R: RngCore + ?Sized>(p: &ModelParams, x0: &[u8], steps: usize, rng: &mut R) -> Result<GibbsState> {
    if steps == 0 {
        return Err(Error::InvalidConfig("a Gibbs chain needs at least one step".into()));
    }
    let mut cache = p.activations(x0)?;
    let mut state = sweep(p, &cache, rng);
    for _ in 1..steps {
        cache = p.activations(&state.x)?;
        state = sweep(p, &cache, rng);
    }
    Ok(state)
}

/// Runs a long chain from `x0`, calling `visit` on the visible vector after
/// every `thinning`-th sweep.
pub fn run_chain<R, F>(p: &ModelParams, x0: &[u8], steps: usize, thinning: usize, rng: &mut R, mut visit: F) -> Result<()>
where
    R: RngCore + ?Sized,
    F: FnMut(&[u8]),
{
    if thinning == 0 {
        return Err(Error::InvalidConfig("thinning must be positive".into()));
    }
    let mut cache = p.activations(x0)?;
    for step in 1..=steps {
        let state = sweep(p, &cache, rng);
        if step % thinning == 0 {
            visit(&state.x);
        }
        cache = p.activations(&state.x)?;
    }
    Ok(())
}

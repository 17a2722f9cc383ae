//! Bernoulli sample sources and the variates drawn alongside them.
//!
//! Every source counts the bits it has delivered; that counter is the
//! running sample size `T` reported by the estimators. Simulated sources
//! and the auxiliary [`VariateRng`] are ChaCha8 streams keyed by a master
//! seed and a stream index, so replicate `i` of an experiment sees the same
//! numbers however the replicates are scheduled.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::error::{domain, Error, Result};

/// A stream of iid Bernoulli outcomes.
///
/// Sources are single-consumer; they are `Send` but not meant to be shared.
pub trait SampleSource {
    /// The next outcome. Finite sources fail with [`Error::Exhausted`].
    fn next_bernoulli(&mut self) -> Result<bool>;

    /// Number of outcomes delivered so far.
    fn draws_consumed(&self) -> u64;

    /// Index of the first success among fresh bits: a `Geo(p)` draw.
    fn draw_geometric(&mut self) -> Result<u64> {
        let mut r = 1;
        while !self.next_bernoulli()? {
            r += 1;
        }
        Ok(r)
    }

    /// Bits consumed until the `k`-th success: a negative binomial draw
    /// counted in trials.
    fn draw_negbin_trials(&mut self, k: u64) -> Result<u64> {
        let mut total = 0;
        for _ in 0..k {
            total += self.draw_geometric()?;
        }
        Ok(total)
    }
}

impl<S: SampleSource + ?Sized> SampleSource for &mut S {
    fn next_bernoulli(&mut self) -> Result<bool> {
        (**self).next_bernoulli()
    }

    fn draws_consumed(&self) -> u64 {
        (**self).draws_consumed()
    }
}

impl<S: SampleSource + ?Sized> SampleSource for Box<S> {
    fn next_bernoulli(&mut self) -> Result<bool> {
        (**self).next_bernoulli()
    }

    fn draws_consumed(&self) -> u64 {
        (**self).draws_consumed()
    }
}

fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Bits `1(U < p)` from a seeded uniform stream.
#[derive(Debug, Clone)]
pub struct SimulatedSource {
    p: f64,
    rng: ChaCha8Rng,
    consumed: u64,
}

impl SimulatedSource {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        Self::with_stream(p, seed, 0)
    }

    /// The bit stream of replicate `index` under `master_seed`.
    pub fn for_replicate(p: f64, master_seed: u64, index: u64) -> Result<Self> {
        Self::with_stream(p, master_seed, 2 * index)
    }

    fn with_stream(p: f64, seed: u64, stream: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(domain(format!("success probability must lie in [0, 1], got {p}")));
        }
        Ok(SimulatedSource { p, rng: stream_rng(seed, stream), consumed: 0 })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl SampleSource for SimulatedSource {
    fn next_bernoulli(&mut self) -> Result<bool> {
        self.consumed += 1;
        Ok(self.rng.gen::<f64>() < self.p)
    }

    fn draws_consumed(&self) -> u64 {
        self.consumed
    }
}

/// A finite bit sequence held in memory.
#[derive(Debug, Clone)]
pub struct InMemorySource {
    bits: Vec<bool>,
    pos: usize,
}

impl InMemorySource {
    pub fn new(bits: Vec<bool>) -> Self {
        InMemorySource { bits, pos: 0 }
    }

    /// Parses the bit-file text format: `'0'` and `'1'`, whitespace ignored.
    pub fn parse(text: &[u8]) -> Result<Self> {
        let mut bits = Vec::with_capacity(text.len());
        for (offset, &byte) in text.iter().enumerate() {
            if let Some(b) = decode(byte, offset as u64)? {
                bits.push(b);
            }
        }
        Ok(Self::new(bits))
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

impl SampleSource for InMemorySource {
    fn next_bernoulli(&mut self) -> Result<bool> {
        match self.bits.get(self.pos) {
            Some(&b) => {
                self.pos += 1;
                Ok(b)
            }
            None => Err(Error::Exhausted { consumed: self.pos as u64, bytes_read: self.pos as u64 }),
        }
    }

    fn draws_consumed(&self) -> u64 {
        self.pos as u64
    }
}

fn decode(byte: u8, offset: u64) -> Result<Option<bool>> {
    match byte {
        b'0' => Ok(Some(false)),
        b'1' => Ok(Some(true)),
        b if b.is_ascii_whitespace() => Ok(None),
        b => Err(Error::Format { offset, byte: b }),
    }
}

/// Bits read lazily from a file in the bit-file text format.
#[derive(Debug)]
pub struct FileSource<R = BufReader<File>> {
    reader: R,
    bytes_read: u64,
    consumed: u64,
}

impl FileSource {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::from_reader(BufReader::new(File::open(path)?)))
    }
}

impl<R: Read> FileSource<R> {
    pub fn from_reader(reader: R) -> Self {
        FileSource { reader, bytes_read: 0, consumed: 0 }
    }

    pub fn bytes_read(&self) -> u64 {
        self.bytes_read
    }
}

impl<R: Read> SampleSource for FileSource<R> {
    fn next_bernoulli(&mut self) -> Result<bool> {
        let mut buf = [0u8; 1];
        loop {
            if self.reader.read(&mut buf)? == 0 {
                return Err(Error::Exhausted { consumed: self.consumed, bytes_read: self.bytes_read });
            }
            let offset = self.bytes_read;
            self.bytes_read += 1;
            if let Some(b) = decode(buf[0], offset)? {
                self.consumed += 1;
                return Ok(b);
            }
        }
    }

    fn draws_consumed(&self) -> u64 {
        self.consumed
    }
}

/// A uniform variate on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UniformDraw(f64);

impl UniformDraw {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..1.0).contains(&value) {
            Ok(UniformDraw(value))
        } else {
            Err(domain(format!("uniform draw must lie in [0, 1), got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The value with an exact 0 replaced by the smallest positive `f64`,
    /// for use as a quantile level.
    pub fn positive(self) -> f64 {
        if self.0 == 0.0 {
            f64::from_bits(1)
        } else {
            self.0
        }
    }
}

/// Uniform and gamma variates for the estimators, independent of the bit
/// stream.
#[derive(Debug, Clone)]
pub struct VariateRng(ChaCha8Rng);

impl VariateRng {
    pub fn new(seed: u64) -> Self {
        VariateRng(stream_rng(seed, 1))
    }

    /// The variate stream of replicate `index`; disjoint from every bit
    /// stream made by [`SimulatedSource::for_replicate`].
    pub fn for_replicate(master_seed: u64, index: u64) -> Self {
        VariateRng(stream_rng(master_seed, 2 * index + 1))
    }

    pub fn uniform(&mut self) -> UniformDraw {
        UniformDraw(self.0.gen::<f64>())
    }
}

/// A `Gamma(shape, 1)` variate (Marsaglia and Tsang's method).
pub fn draw_gamma(shape: f64, rng: &mut VariateRng) -> Result<f64> {
    let dist = Gamma::new(shape, 1.0)
        .map_err(|_| domain(format!("gamma shape must be positive and finite, got {shape}")))?;
    Ok(dist.sample(&mut rng.0))
}

/// A `Gamma(shape, 1)` variate for integer `shape <= 64` as a sum of
/// standard exponentials.
pub fn draw_gamma_integer(shape: u32, rng: &mut VariateRng) -> Result<f64> {
    if !(1..=64).contains(&shape) {
        return Err(domain(format!("integer gamma path needs 1 <= shape <= 64, got {shape}")));
    }
    Ok((0..shape).map(|_| -> f64 { Exp1.sample(&mut rng.0) }).sum())
}

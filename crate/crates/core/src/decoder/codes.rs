use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, RngCore};

use super::{LocalView, NonAdaptiveDecoder, Predicate, Symbol};
use crate::error::{argument, Result};
use crate::radical::{format_rational, parse_rational, ratio};

/// Which built-in code, with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeKind {
    Identity { k: usize },
    Repetition { k: usize, r: usize },
    Hadamard { m: usize },
    /// `pivot` zero bits followed by `copies` copies of each message bit.
    SharedPivot { pivot: usize, copies: usize, k: usize },
}

/// A binary code `{0,1}^k → {0,1}^n` with its distance and decoding radius.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Code {
    kind: CodeKind,
    dimension: usize,
    length: usize,
    relative_distance: BigRational,
    radius: BigRational,
}

impl Code {
    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn relative_distance(&self) -> &BigRational {
        &self.relative_distance
    }

    /// The decoding radius `δ`, as a fraction of `n`.
    pub fn radius(&self) -> &BigRational {
        &self.radius
    }

    /// Replaces `δ`; it must lie in `[0, distance/2)`.
    pub fn with_radius(mut self, radius: BigRational) -> Result<Self> {
        let half = &self.relative_distance / BigInt::from(2);
        if radius.is_negative() || radius >= half {
            return Err(argument(format!(
                "radius {radius} must lie in [0, {half}) for {}",
                self.name()
            )));
        }
        self.radius = radius;
        Ok(self)
    }

    /// Number of coordinates that may be flipped while staying in radius.
    pub fn max_corruptions(&self) -> usize {
        (&self.radius * BigInt::from(self.length))
            .floor()
            .to_integer()
            .to_usize()
            .unwrap_or(0)
    }

    pub fn name(&self) -> String {
        match self.kind {
            CodeKind::Identity { k } => format!("identity:k={k}"),
            CodeKind::Repetition { k, r } => format!("repetition:k={k},r={r}"),
            CodeKind::Hadamard { m } => format!("hadamard:m={m}"),
            CodeKind::SharedPivot { pivot, copies, k } => {
                format!("shared-pivot:kappa={pivot},r={copies},k={k}")
            }
        }
    }

    pub fn encode(&self, message: &[bool]) -> Result<Vec<bool>> {
        if message.len() != self.dimension {
            return Err(argument(format!(
                "message of length {} for code of dimension {}",
                message.len(),
                self.dimension
            )));
        }
        Ok(match self.kind {
            CodeKind::Identity { .. } => message.to_vec(),
            CodeKind::Repetition { r, .. } => message
                .iter()
                .flat_map(|&b| std::iter::repeat_n(b, r))
                .collect(),
            CodeKind::Hadamard { m } => (0..self.length)
                .map(|a| {
                    (0..m)
                        .filter(|&i| message[i] && hadamard_bit(m, a, i))
                        .count()
                        % 2
                        == 1
                })
                .collect(),
            CodeKind::SharedPivot { pivot, copies, .. } => std::iter::repeat_n(false, pivot)
                .chain(message.iter().flat_map(|&b| std::iter::repeat_n(b, copies)))
                .collect(),
        })
    }

    pub fn random_message(&self, rng: &mut dyn RngCore) -> Vec<bool> {
        (0..self.dimension).map(|_| rng.gen::<bool>()).collect()
    }

    /// Flips exactly `count` distinct uniformly chosen coordinates.
    pub fn corrupt(&self, word: &[bool], count: usize, rng: &mut dyn RngCore) -> Result<Vec<bool>> {
        if count > word.len() {
            return Err(argument(format!("cannot flip {count} of {} coordinates", word.len())));
        }
        let mut out = word.to_vec();
        for j in rand::seq::index::sample(rng, word.len(), count) {
            out[j] = !out[j];
        }
        Ok(out)
    }

    /// A random message and its codeword with exactly `⌊δn⌋` flips.
    pub fn in_radius_word(&self, rng: &mut dyn RngCore) -> Result<(Vec<bool>, Vec<bool>)> {
        let message = self.random_message(rng);
        let word = self.encode(&message)?;
        let corrupted = self.corrupt(&word, self.max_corruptions(), rng)?;
        Ok((message, corrupted))
    }
}

/// Coordinate `a` of a Hadamard codeword pairs with message bit `i` through
/// bit `m-1-i` of `a` (the first message bit is the most significant).
fn hadamard_bit(m: usize, a: usize, i: usize) -> bool {
    a >> (m - 1 - i) & 1 == 1
}

fn xor_predicate() -> Predicate {
    Predicate::table(vec![Symbol::Zero, Symbol::One, Symbol::One, Symbol::Zero])
}

/// The Hadamard code on `m` message bits, with the 2-query decoder that reads
/// `{r, r ⊕ e_i}` for a uniform `r` and outputs the XOR. Each unordered pair
/// is one view of weight `2/n`.
pub fn hadamard_code(m: usize) -> Result<(Code, NonAdaptiveDecoder)> {
    if m == 0 || m > 20 {
        return Err(argument(format!("hadamard dimension must be in 1..=20, got {m}")));
    }
    let n = 1usize << m;
    let code = Code {
        kind: CodeKind::Hadamard { m },
        dimension: m,
        length: n,
        relative_distance: ratio(1, 2),
        radius: ratio(1, 8),
    };
    let weight = ratio(2, n as u64);
    let predicate = xor_predicate();
    let views = (0..m)
        .map(|i| {
            let e = 1usize << (m - 1 - i);
            (0..n)
                .filter(|r| r & e == 0)
                .map(|r| LocalView {
                    queries: vec![r, r | e],
                    weight: weight.clone(),
                    predicate: predicate.clone(),
                })
                .collect()
        })
        .collect();
    Ok((code, NonAdaptiveDecoder::new(m, n, views)?))
}

/// `(0^pivot, copies × x_1, …, copies × x_k)`. The decoder for `i` reads the
/// whole pivot block and one uniformly random copy of `x_i`, and outputs the
/// copy if the pivot reads all zeros, ⊥ otherwise.
pub fn shared_pivot_code(pivot: usize, copies: usize, k: usize) -> Result<(Code, NonAdaptiveDecoder)> {
    if pivot == 0 || copies == 0 || k == 0 {
        return Err(argument("shared-pivot parameters must be positive"));
    }
    if pivot > 16 {
        return Err(argument("pivot block wider than 16 coordinates"));
    }
    let n = pivot + k * copies;
    let code = Code {
        kind: CodeKind::SharedPivot { pivot, copies, k },
        dimension: k,
        length: n,
        relative_distance: ratio(copies as u64, n as u64),
        radius: ratio(copies as u64, 4 * n as u64),
    };
    // answers: pivot bits at positions 0..pivot, the copy at position `pivot`
    let predicate = Predicate::table(
        (0..1usize << (pivot + 1))
            .map(|a| {
                if a & ((1 << pivot) - 1) == 0 {
                    Symbol::from_bit(a >> pivot & 1 == 1)
                } else {
                    Symbol::Reject
                }
            })
            .collect(),
    );
    let weight = ratio(1, copies as u64);
    let views = (0..k)
        .map(|i| {
            (0..copies)
                .map(|j| LocalView {
                    queries: (0..pivot).chain(std::iter::once(pivot + i * copies + j)).collect(),
                    weight: weight.clone(),
                    predicate: predicate.clone(),
                })
                .collect()
        })
        .collect();
    Ok((code, NonAdaptiveDecoder::new(k, n, views)?))
}

/// Each bit stored once; the decoder reads it.
pub fn identity_code(k: usize) -> Result<(Code, NonAdaptiveDecoder)> {
    let (code, decoder) = repetition_code(k, 1)?;
    Ok((Code { kind: CodeKind::Identity { k }, ..code }, decoder))
}

/// Each bit stored `r` times; the decoder reads one uniformly random copy.
pub fn repetition_code(k: usize, r: usize) -> Result<(Code, NonAdaptiveDecoder)> {
    if k == 0 || r == 0 {
        return Err(argument("repetition parameters must be positive"));
    }
    let n = k * r;
    let code = Code {
        kind: CodeKind::Repetition { k, r },
        dimension: k,
        length: n,
        relative_distance: ratio(1, k as u64),
        radius: ratio(1, 4 * k as u64),
    };
    let read = Predicate::read_bit(1, 0);
    let weight = ratio(1, r as u64);
    let views = (0..k)
        .map(|i| {
            (0..r)
                .map(|j| LocalView {
                    queries: vec![i * r + j],
                    weight: weight.clone(),
                    predicate: read.clone(),
                })
                .collect()
        })
        .collect();
    Ok((code, NonAdaptiveDecoder::new(k, n, views)?))
}

/// A code named on the command line, e.g. `hadamard:m=10` or
/// `shared-pivot:kappa=2,r=64,k=16`, optionally with `delta=a/b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSpec {
    pub kind: CodeKind,
    pub radius: Option<BigRational>,
}

impl CodeSpec {
    pub fn build(&self) -> Result<(Code, NonAdaptiveDecoder)> {
        let (code, decoder) = match self.kind {
            CodeKind::Identity { k } => identity_code(k)?,
            CodeKind::Repetition { k, r } => repetition_code(k, r)?,
            CodeKind::Hadamard { m } => hadamard_code(m)?,
            CodeKind::SharedPivot { pivot, copies, k } => shared_pivot_code(pivot, copies, k)?,
        };
        let code = match &self.radius {
            Some(r) => code.with_radius(r.clone())?,
            None => code,
        };
        Ok((code, decoder))
    }
}

impl FromStr for CodeSpec {
    type Err = crate::Error;

    fn from_str(text: &str) -> Result<Self> {
        let (name, params) = text.split_once(':').unwrap_or((text, ""));
        let mut values = std::collections::BTreeMap::new();
        let mut radius = None;
        for pair in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| argument(format!("expected key=value in {pair:?}")))?;
            let key = key.trim();
            if key == "delta" {
                radius = Some(parse_rational(value)?);
                continue;
            }
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| argument(format!("bad integer for {key}: {value:?}")))?;
            values.insert(key.to_string(), value);
        }
        let get = |key: &str| -> Result<usize> {
            values
                .get(key)
                .copied()
                .ok_or_else(|| argument(format!("code {name:?} needs parameter {key}")))
        };
        let kind = match name.trim() {
            "identity" => CodeKind::Identity { k: get("k")? },
            "repetition" => CodeKind::Repetition { k: get("k")?, r: get("r")? },
            "hadamard" => CodeKind::Hadamard { m: get("m")? },
            "shared-pivot" | "pivot" => CodeKind::SharedPivot {
                pivot: values.get("kappa").copied().map_or_else(|| get("pivot"), Ok)?,
                copies: get("r")?,
                k: get("k")?,
            },
            other => return Err(argument(format!("unknown code {other:?}"))),
        };
        Ok(CodeSpec { kind, radius })
    }
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.kind {
            CodeKind::Identity { k } => format!("identity:k={k}"),
            CodeKind::Repetition { k, r } => format!("repetition:k={k},r={r}"),
            CodeKind::Hadamard { m } => format!("hadamard:m={m}"),
            CodeKind::SharedPivot { pivot, copies, k } => {
                format!("shared-pivot:kappa={pivot},r={copies},k={k}")
            }
        };
        match &self.radius {
            Some(r) => write!(f, "{base},delta={}", format_rational(r)),
            None => f.write_str(&base),
        }
    }
}

/// Minimum relative distance over all pairs of messages, by enumeration.
pub fn measured_distance(code: &Code) -> Result<BigRational> {
    let k = code.dimension();
    if k > 12 {
        return Err(argument("exhaustive distance needs k ≤ 12"));
    }
    let words = (0..1usize << k)
        .map(|x| code.encode(&(0..k).map(|i| x >> i & 1 == 1).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let mut best = code.length();
    for (a, wa) in words.iter().enumerate() {
        for wb in &words[a + 1..] {
            best = best.min(wa.iter().zip(wb).filter(|(x, y)| x != y).count());
        }
    }
    Ok(BigRational::new(BigInt::from(best), BigInt::from(code.length())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::{output_distribution, run_decoder, LocalDecoder};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn bits(x: usize, k: usize) -> Vec<bool> {
        (0..k).map(|i| x >> i & 1 == 1).collect()
    }

    #[test]
    fn hadamard_small_codeword() {
        let (code, dec) = hadamard_code(2).unwrap();
        let w = code.encode(&[true, false]).unwrap();
        assert_eq!(w, vec![false, false, true, true]);
        // index 0 (the first message bit), r = 01: pair {01, 11}
        let view = dec.views(0).iter().find(|v| v.queries == vec![1, 3]).unwrap();
        assert_eq!(view.eval(&w).unwrap(), Symbol::One);
        assert_eq!(code.encode(&[false, false]).unwrap(), vec![false; 4]);
    }

    #[test]
    fn hadamard_single_corruption_error_rate() {
        let (code, dec) = hadamard_code(3).unwrap();
        let x = [true, false, true];
        let w = code.encode(&x).unwrap();
        for c in 0..8 {
            let mut bad = w.clone();
            bad[c] = !bad[c];
            for (i, &xi) in x.iter().enumerate() {
                // oracle: over the 8 raw coins r, exactly r = c and r = c ⊕ e_i hit
                let raw_wrong = (0..8usize)
                    .filter(|&r| {
                        let e = 1 << (2 - i);
                        (bad[r] ^ bad[r ^ e]) != xi
                    })
                    .count();
                assert_eq!(raw_wrong, 2);
                let dist = output_distribution(&dec, &bad, i, 1 << 16).unwrap().unwrap();
                assert_eq!(dist.wrong(xi), &ratio(2, 8));
            }
        }
    }

    #[test]
    fn hadamard_decodes_under_every_coin() {
        let (code, dec) = hadamard_code(3).unwrap();
        for x in 0..8 {
            let msg = bits(x, 3);
            let w = code.encode(&msg).unwrap();
            for (i, &bit) in msg.iter().enumerate() {
                for view in dec.views(i) {
                    assert_eq!(view.eval(&w).unwrap(), Symbol::from_bit(bit));
                }
            }
        }
    }

    #[test]
    fn shared_pivot_paths() {
        let (code, dec) = shared_pivot_code(1, 2, 2).unwrap();
        let w = code.encode(&[true, false]).unwrap();
        assert_eq!(w, vec![false, true, true, false, false]);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (out, q) = run_decoder(&dec, &w, 0, &mut rng).unwrap();
        assert_eq!(out, Symbol::One);
        assert_eq!(q.len(), 2);
        assert_eq!(q[0], 0);
        let mut flipped = w.clone();
        flipped[0] = true;
        for view in dec.views(0).iter().chain(dec.views(1)) {
            assert_eq!(view.eval(&flipped).unwrap(), Symbol::Reject);
        }
        assert_eq!(dec.locality(), 2);
    }

    #[test]
    fn identity_and_repetition() {
        let (code, dec) = identity_code(3).unwrap();
        let msg = [true, false, true];
        let w = code.encode(&msg).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for (i, &bit) in msg.iter().enumerate() {
            let (out, q) = run_decoder(&dec, &w, i, &mut rng).unwrap();
            assert_eq!(out, Symbol::from_bit(bit));
            assert_eq!(q, vec![i]);
        }

        let (rep, rdec) = repetition_code(2, 3).unwrap();
        let mut w = rep.encode(&[true, false]).unwrap();
        w[1] = false;
        let dist = output_distribution(&rdec, &w, 0, 100).unwrap().unwrap();
        assert_eq!(dist.wrong(true), &ratio(1, 3));

        let (id, idec) = identity_code(4).unwrap();
        let (r1, r1dec) = repetition_code(4, 1).unwrap();
        assert_eq!(idec, r1dec);
        assert_eq!(id.length(), r1.length());
    }

    #[test]
    fn distances_match_exhaustive_enumeration() {
        for (code, _) in [
            hadamard_code(4).unwrap(),
            shared_pivot_code(2, 3, 3).unwrap(),
            identity_code(5).unwrap(),
            repetition_code(3, 4).unwrap(),
        ] {
            let measured = measured_distance(&code).unwrap();
            assert_eq!(&measured, code.relative_distance(), "{}", code.name());
            assert!(code.radius() * BigInt::from(2) < *code.relative_distance());
        }
    }

    #[test]
    fn spec_parsing() {
        let spec: CodeSpec = "hadamard:m=10".parse().unwrap();
        assert_eq!(spec.kind, CodeKind::Hadamard { m: 10 });
        let spec: CodeSpec = "shared-pivot:kappa=2,r=64,k=16,delta=1/100".parse().unwrap();
        assert_eq!(spec.kind, CodeKind::SharedPivot { pivot: 2, copies: 64, k: 16 });
        assert_eq!(spec.to_string(), "shared-pivot:kappa=2,r=64,k=16,delta=1/100");
        assert!("hadamard".parse::<CodeSpec>().is_err());
        assert!("nope:k=1".parse::<CodeSpec>().is_err());
        assert!("identity:k=4,delta=1/2".parse::<CodeSpec>().unwrap().build().is_err());
    }

    #[test]
    fn corruption_count_is_exact() {
        let (code, _) = hadamard_code(6).unwrap();
        assert_eq!(code.max_corruptions(), 8);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (msg, w) = code.in_radius_word(&mut rng).unwrap();
        let clean = code.encode(&msg).unwrap();
        assert_eq!(clean.iter().zip(&w).filter(|(a, b)| a != b).count(), 8);
    }
}

//! Genus-zero recursions for higher correlation functions of quartic matrix models.
//!
//! A single-cycle function `G_{|b₀…b_{N−1}|}` is reduced to 2-point functions by
//! ```text
//! G_{|b₀…b_{N−1}|} = (−λ) Σ_{l=1}^{(N−2)/2}
//!     [G_{|b₀…b_{2l−1}|} G_{|b_{2l}…b_{N−1}|} − G_{|b_{2l}b₁…b_{2l−1}|} G_{|b₀b_{2l+1}…b_{N−1}|}]
//!     / ((E_{b₀}−E_{b_{2l}})(E_{b₁}−E_{b_{N−1}}))
//! ```

use std::collections::{BTreeSet, HashMap};

use crate::error::{invalid, Error, Result};
use crate::solver::BoundarySolution;
use crate::twopoint::TwoPointField;

/// Injective map from index labels `0..len` to positive eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenvalueTable {
    values: Vec<f64>,
}

impl EigenvalueTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return invalid(format!("eigenvalues must be positive, got {v}"));
        }
        for (i, a) in values.iter().enumerate() {
            if values[..i].contains(a) {
                return invalid(format!("eigenvalue {a} appears twice"));
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, label: usize) -> Result<f64> {
        self.values
            .get(label)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no eigenvalue for label {label}")))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn diff(e: &[f64], i: usize, j: usize) -> Result<f64> {
    let d = e[i] - e[j];
    if d == 0.0 {
        return Err(Error::DegenerateDenominator(format!(
            "E = {} appears on both sides of a denominator",
            e[i]
        )));
    }
    Ok(d)
}

fn check_even(n: usize) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return invalid(format!("cycle length must be even and ≥ 2, got {n}"));
    }
    Ok(())
}

/// Single-cycle recursion over abstract points with energies `e[p]`.
struct Single<'a, F: Fn(usize, usize) -> f64> {
    e: &'a [f64],
    coupling: f64,
    g2: F,
    memo: HashMap<Vec<usize>, f64>,
}

impl<F: Fn(usize, usize) -> f64> Single<'_, F> {
    fn eval(&mut self, b: &[usize]) -> Result<f64> {
        let n = b.len();
        check_even(n)?;
        if n == 2 {
            return Ok((self.g2)(b[0], b[1]));
        }
        if let Some(v) = self.memo.get(b) {
            return Ok(*v);
        }
        let d1 = diff(self.e, b[1], b[n - 1])?;
        let mut acc = 0.0;
        for l in 1..=(n - 2) / 2 {
            let k = 2 * l;
            let d0 = diff(self.e, b[0], b[k])?;
            let first = self.eval(&b[..k])?;
            let second = self.eval(&b[k..])?;
            let swapped: Vec<usize> = [b[k]].iter().chain(&b[1..k]).copied().collect();
            let rest: Vec<usize> = [b[0]].iter().chain(&b[k + 1..]).copied().collect();
            let third = self.eval(&swapped)?;
            let fourth = self.eval(&rest)?;
            acc += (first * second - third * fourth) / (d0 * d1);
        }
        let v = self.coupling * acc;
        self.memo.insert(b.to_vec(), v);
        Ok(v)
    }
}

/// Planar `N`-point function on a cycle of eigenvalue labels, from a symmetric 2-point function.
pub fn planar_npoint(
    e: &EigenvalueTable,
    lambda: f64,
    g2: impl Fn(usize, usize) -> f64,
    cycle: &[usize],
) -> Result<f64> {
    check_even(cycle.len())?;
    let energies: Vec<f64> = cycle.iter().map(|&c| e.get(c)).collect::<Result<_>>()?;
    let positions: Vec<usize> = (0..cycle.len()).collect();
    let mut rec = Single {
        e: &energies,
        coupling: -lambda,
        g2: |i: usize, j: usize| g2(cycle[i], cycle[j]),
        memo: HashMap::new(),
    };
    rec.eval(&positions)
}

/// The same recursion in continuous indices with `E_b ↦ b`, 2-point input from the field,
/// and coupling `(−λ)/(1+𝒴)²` per level.
pub fn planar_npoint_moyal(
    sol: &BoundarySolution,
    field: &TwoPointField,
    indices: &[f64],
) -> Result<f64> {
    let coupling = -sol.lambda() / (1.0 + sol.y).powi(2);
    npoint_continuous(coupling, |a, b| field.interp(a, b), indices)
}

/// Continuous-index recursion with an explicit per-level coupling.
pub fn npoint_continuous(
    coupling: f64,
    g2: impl Fn(f64, f64) -> f64,
    indices: &[f64],
) -> Result<f64> {
    check_even(indices.len())?;
    let positions: Vec<usize> = (0..indices.len()).collect();
    let mut rec = Single {
        e: indices,
        coupling,
        g2: |i: usize, j: usize| g2(indices[i], indices[j]),
        memo: HashMap::new(),
    };
    rec.eval(&positions)
}

type Two<'a> = Box<dyn Fn(usize, usize) -> f64 + 'a>;
type Four<'a> = Box<dyn Fn(usize, usize, usize, usize) -> f64 + 'a>;

/// Basic functions feeding the two-cycle recursion: `G_{|xy|}`, `G_{|x|y|}` and `G_{|xy|zw|}`.
#[derive(Default)]
pub struct BasicFunctions<'a> {
    pub g2: Option<Two<'a>>,
    pub g11: Option<Two<'a>>,
    pub g22: Option<Four<'a>>,
}

struct TwoCycle<'a, 'b> {
    e: &'a EigenvalueTable,
    lambda: f64,
    basic: &'a BasicFunctions<'b>,
    single: HashMap<Vec<usize>, f64>,
    double: HashMap<(Vec<usize>, Vec<usize>), f64>,
}

fn cat(parts: &[&[usize]]) -> Vec<usize> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

impl TwoCycle<'_, '_> {
    fn energy(&self, label: usize) -> Result<f64> {
        self.e.get(label)
    }

    fn denom(&self, x: usize, y: usize) -> Result<f64> {
        let d = self.energy(x)? - self.energy(y)?;
        if d == 0.0 {
            return Err(Error::DegenerateDenominator(format!(
                "labels {x} and {y} share the eigenvalue {}",
                self.energy(x)?
            )));
        }
        Ok(d)
    }

    fn g1(&mut self, b: &[usize]) -> Result<f64> {
        if let Some(v) = self.single.get(b) {
            return Ok(*v);
        }
        let g2 = self
            .basic
            .g2
            .as_ref()
            .ok_or_else(|| Error::MissingProvider("G_{|xy|}".into()))?;
        let v = planar_npoint(self.e, self.lambda, g2, b)?;
        self.single.insert(b.to_vec(), v);
        Ok(v)
    }

    fn g(&mut self, b: &[usize], c: &[usize]) -> Result<f64> {
        if b.len() < c.len() {
            return self.g(c, b);
        }
        if !(b.len() + c.len()).is_multiple_of(2) || c.is_empty() {
            return invalid(format!(
                "two-cycle function needs an even total and two non-empty cycles, got {}+{}",
                b.len(),
                c.len()
            ));
        }
        let key = (b.to_vec(), c.to_vec());
        if let Some(v) = self.double.get(&key) {
            return Ok(*v);
        }
        let v = match (b.len(), c.len()) {
            (1, 1) => {
                let f = self.basic.g11.as_ref();
                f.ok_or_else(|| Error::MissingProvider("G_{|x|y|}".into()))?(b[0], c[0])
            }
            (2, 2) => {
                let f = self.basic.g22.as_ref();
                f.ok_or_else(|| Error::MissingProvider("G_{|xy|zw|}".into()))?(
                    b[0], b[1], c[0], c[1],
                )
            }
            (n, _) if n % 2 == 1 => self.odd(b, c)?,
            _ => self.even(b, c)?,
        };
        self.double.insert(key, v);
        Ok(v)
    }

    /// `b = (b₀ … b_{2l})`, `c` of odd length.
    fn odd(&mut self, b: &[usize], c: &[usize]) -> Result<f64> {
        let l = (b.len() - 1) / 2;
        let top = b[2 * l];
        let d1 = self.denom(b[1], top)?;
        let mut acc = 0.0;
        for k in 1..=c.len() {
            let ck = c[k - 1];
            let x = cat(&[&c[..k - 1], &[b[0]], &b[1..], &c[k - 1..]]);
            let y = cat(&[&c[..k], &b[1..], &[b[0]], &c[k..]]);
            acc += (self.g1(&x)? - self.g1(&y)?) / (d1 * self.denom(b[0], ck)?);
        }
        for j in 1..=l {
            let p = b[2 * j - 1];
            let u = self.g(&b[..2 * j - 1], c)? * self.g1(&b[2 * j - 1..])?;
            let v = self.g(&cat(&[&[p], &b[1..2 * j - 1]]), c)?
                * self.g1(&cat(&[&[b[0]], &b[2 * j..]]))?;
            acc += (u - v) / (d1 * self.denom(b[0], p)?);
        }
        for j in 1..=l {
            let p = b[2 * j];
            let u = self.g1(&b[..2 * j])? * self.g(&b[2 * j..], c)?;
            let v = self.g1(&cat(&[&[p], &b[1..2 * j]]))?
                * self.g(&cat(&[&[b[0]], &b[2 * j + 1..]]), c)?;
            acc += (u - v) / (d1 * self.denom(b[0], p)?);
        }
        Ok(-self.lambda * acc)
    }

    /// `b = (a, b₁ … b_{2l−1})` with `l ≥ 2`, `c` of even length.
    fn even(&mut self, b: &[usize], c: &[usize]) -> Result<f64> {
        let l = b.len() / 2;
        let a = b[0];
        let d1 = self.denom(b[1], b[2 * l - 1])?;
        let mut acc = 0.0;
        for j in 1..l {
            let p = b[2 * j];
            let d = d1 * self.denom(a, p)?;
            let head_a = cat(&[&b[1..2 * j], &[a]]);
            let head_p = &b[1..=2 * j];
            let tail_a = cat(&[&[a], &b[2 * j + 1..]]);
            let tail_p = &b[2 * j..];
            let u = self.g(&head_a, c)? * self.g1(tail_p)?;
            let v = self.g(head_p, c)? * self.g1(&tail_a)?;
            acc += (u - v) / d;
            let u = self.g1(&head_a)? * self.g(tail_p, c)?;
            let v = self.g1(head_p)? * self.g(&tail_a, c)?;
            acc += (u - v) / d;
        }
        for k in 1..=c.len() {
            let ck = c[k - 1];
            let x = cat(&[&c[..k - 1], &[a], &b[1..], &c[k - 1..]]);
            let y = cat(&[&c[..k], &b[1..], &[a], &c[k..]]);
            acc += (self.g1(&x)? - self.g1(&y)?) / (d1 * self.denom(a, ck)?);
        }
        Ok(-self.lambda * acc)
    }
}

/// Planar two-cycle function `G_{|b…|c…|}` from caller-supplied basic functions.
pub fn planar_npoint_two_boundary(
    e: &EigenvalueTable,
    basic: &BasicFunctions<'_>,
    b_cycle: &[usize],
    c_cycle: &[usize],
    lambda: f64,
) -> Result<f64> {
    if b_cycle.len().max(c_cycle.len()) < 3 {
        return invalid("the longer cycle needs at least 3 indices");
    }
    let mut rec = TwoCycle {
        e,
        lambda,
        basic,
        single: HashMap::new(),
        double: HashMap::new(),
    };
    rec.g(b_cycle, c_cycle)
}

/// One monomial of the expanded recursion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordTerm {
    /// 2-point factors as chords between cycle positions, each `(i, j)` with `i < j`.
    pub chords: Vec<(usize, usize)>,
    /// Denominator factors `1/(E_i − E_j)` as arrows `i → j`, in recursion order.
    pub arrows: Vec<(usize, usize)>,
    pub sign: i8,
}

impl ChordTerm {
    pub fn pairing(&self) -> BTreeSet<(usize, usize)> {
        self.chords.iter().copied().collect()
    }
}

#[derive(Debug, Clone)]
pub struct ChordExpansion {
    pub n: usize,
    /// All monomials; the common factor `(−λ)^{N/2−1}` is implied.
    pub terms: Vec<ChordTerm>,
    pub distinct_pairings: usize,
}

fn expand(b: &[usize]) -> Vec<ChordTerm> {
    let n = b.len();
    if n == 2 {
        let (i, j) = (b[0].min(b[1]), b[0].max(b[1]));
        return vec![ChordTerm {
            chords: vec![(i, j)],
            arrows: vec![],
            sign: 1,
        }];
    }
    let mut out = Vec::new();
    for l in 1..=(n - 2) / 2 {
        let k = 2 * l;
        let arrows = [(b[0], b[k]), (b[1], b[n - 1])];
        let swapped: Vec<usize> = [b[k]].iter().chain(&b[1..k]).copied().collect();
        let rest: Vec<usize> = [b[0]].iter().chain(&b[k + 1..]).copied().collect();
        for (sign, x, y) in [(1, b[..k].to_vec(), b[k..].to_vec()), (-1, swapped, rest)] {
            let ex = expand(&x);
            let ey = expand(&y);
            for tx in &ex {
                for ty in &ey {
                    let mut chords = tx.chords.clone();
                    chords.extend(&ty.chords);
                    chords.sort_unstable();
                    let mut arr = arrows.to_vec();
                    arr.extend(&tx.arrows);
                    arr.extend(&ty.arrows);
                    out.push(ChordTerm {
                        chords,
                        arrows: arr,
                        sign: sign * tx.sign * ty.sign,
                    });
                }
            }
        }
    }
    out
}

/// Two chords `(a,b)`, `(c,d)` on a circle cross iff exactly one endpoint of one lies strictly inside the other.
pub fn chords_cross((a, b): (usize, usize), (c, d): (usize, usize)) -> bool {
    let inside = |x: usize| a < x && x < b;
    inside(c) != inside(d) && ![a, b].contains(&c) && ![a, b].contains(&d)
}

pub fn is_non_crossing(chords: &[(usize, usize)]) -> bool {
    chords
        .iter()
        .enumerate()
        .all(|(i, &x)| chords[i + 1..].iter().all(|&y| !chords_cross(x, y)))
}

pub fn chord_expansion(n: usize) -> Result<ChordExpansion> {
    check_even(n)?;
    if n > 16 {
        return Err(Error::SizeLimit(format!(
            "chord expansion capped at N=16, got {n}"
        )));
    }
    let positions: Vec<usize> = (0..n).collect();
    let terms = expand(&positions);
    let distinct: BTreeSet<_> = terms.iter().map(ChordTerm::pairing).collect();
    Ok(ChordExpansion {
        n,
        distinct_pairings: distinct.len(),
        terms,
    })
}

pub fn catalan(k: usize) -> u64 {
    (0..k).fold(1u64, |c, i| c * 2 * (2 * i as u64 + 1) / (i as u64 + 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EigenvalueTable {
        EigenvalueTable::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn four_point_hand_value() {
        let e = table();
        let g2 = |x: usize, y: usize| 1.0 / (e.get(x).unwrap() + e.get(y).unwrap());
        let v = planar_npoint(&e, 1.0, g2, &[0, 1, 2, 3]).unwrap();
        assert!((v + 1.0 / 525.0).abs() < 1e-17);
        assert_eq!(planar_npoint(&e, 1.0, g2, &[2, 3]).unwrap(), g2(2, 3));
    }

    #[test]
    fn rejects_bad_tables_and_cycles() {
        assert!(EigenvalueTable::new(vec![1.0, 1.0]).is_err());
        assert!(EigenvalueTable::new(vec![1.0, -2.0]).is_err());
        let e = table();
        let g2 = |_: usize, _: usize| 1.0;
        assert!(planar_npoint(&e, 1.0, g2, &[0, 1, 2]).is_err());
        assert!(matches!(
            planar_npoint(&e, 1.0, g2, &[0, 1, 0, 3]),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn catalan_numbers() {
        let want = [1, 1, 2, 5, 14, 42, 132, 429, 1430];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(catalan(k), *w);
        }
    }

    #[test]
    fn chord_counts_and_degrees() {
        for n in [2, 4, 6, 8, 10] {
            let ex = chord_expansion(n).unwrap();
            assert_eq!(ex.distinct_pairings as u64, catalan(n / 2));
            for t in &ex.terms {
                assert!(is_non_crossing(&t.chords));
                assert_eq!(t.chords.len(), n / 2);
                assert_eq!(t.arrows.len(), n - 2);
            }
        }
        assert!(matches!(chord_expansion(18), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn expansion_evaluates_to_recursion() {
        let e = EigenvalueTable::new(vec![0.3, 1.1, 1.7, 2.9, 4.2, 5.0]).unwrap();
        let g2 = |x: usize, y: usize| 1.0 / (1.0 + e.get(x).unwrap() + e.get(y).unwrap());
        let lambda = 0.37;
        let direct = planar_npoint(&e, lambda, g2, &[0, 1, 2, 3, 4, 5]).unwrap();
        let ex = chord_expansion(6).unwrap();
        let sum: f64 = ex
            .terms
            .iter()
            .map(|t| {
                let num: f64 = t.chords.iter().map(|&(i, j)| g2(i, j)).product();
                let den: f64 = t
                    .arrows
                    .iter()
                    .map(|&(i, j)| e.get(i).unwrap() - e.get(j).unwrap())
                    .product();
                t.sign as f64 * num / den
            })
            .sum();
        assert!((direct - lambda * lambda * sum).abs() < 1e-14);
    }

    #[test]
    fn two_boundary_needs_providers() {
        let e = table();
        let basic = BasicFunctions::default();
        assert!(matches!(
            planar_npoint_two_boundary(&e, &basic, &[0, 1, 2], &[3], 1.0),
            Err(Error::MissingProvider(_))
        ));
        assert!(planar_npoint_two_boundary(&e, &basic, &[0, 1], &[2, 3], 1.0).is_err());
    }
}

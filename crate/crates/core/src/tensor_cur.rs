//! CUR approximations of 3- and 4-mode tensors built from nested matrix
//! skeleton approximations of unfoldings.
//!
//! For `d = 3` with `|I₁| = k²`, `|I₂| = |I₃| = k` and `J = I₂ × I₃`, the
//! approximation is `B = T₁[:,J] T₁[I₁,J]⁻¹ R̃` where row `α₁` of `R̃` is the
//! skeleton approximation of the slice `Q(α₁) = T(α₁,·,·)` on `(I₂, I₃)`.
//!
//! For `d = 4` with `|I_j| = k`, `J₁ = I₁ × I₂`, `J₂ = I₃ × I₄` and
//! `X = T({0,1},{2,3})`, the approximation is `X̂[:,J₂] X[J₁,J₂]⁻¹ X̂[J₁,:]`
//! where each column `Y(α₃,α₄)` and each row `Z(α₁,α₂)` is replaced by its
//! own skeleton approximation.
//!
//! Positions inside index sets are 0-based offsets into the set, so `α₂ = 1`
//! means the second element of `I₂`.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{pivot_search, PivotFallback, PivotObjective};
use crate::tensor::io::{read_binary_block, write_binary};
use crate::tensor::{IndexSet, Tensor};

const PIVOT_MAX_COND: f64 = 1e12;

fn invert_pivot(m: &DMatrix<f64>, block: impl FnOnce() -> String, fallback: PivotFallback) -> Result<DMatrix<f64>> {
    match linalg::inverse_checked(m, PIVOT_MAX_COND) {
        Ok(inv) => Ok(inv),
        Err(_) if fallback == PivotFallback::PseudoInverse => Ok(linalg::pinv(m)),
        Err(_) => Err(Error::SingularPivot { block: block() }),
    }
}

fn check_set(set: &IndexSet, extent: usize, len: usize, name: &str) -> Result<()> {
    if set.extent() != extent {
        return Err(Error::InvalidIndexSet(format!("{name} ranges over {}, mode extent is {extent}", set.extent())));
    }
    if set.len() != len {
        return Err(Error::InvalidIndexSet(format!("{name} has {} indices, expected {len}", set.len())));
    }
    Ok(())
}

fn check_index(shape: &[usize], idx: &[usize]) -> Result<()> {
    if idx.len() != shape.len() || idx.iter().zip(shape).any(|(i, n)| i >= n) {
        return Err(Error::Dimension(format!("index {idx:?} out of range for shape {shape:?}")));
    }
    Ok(())
}

/// Stored blocks of a 3-mode CUR approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct Cur3Factors {
    shape: [usize; 3],
    k: usize,
    sets: [IndexSet; 3],
    /// `fibers[i₁, α₂k + α₃] = T(i₁, I₂[α₂], I₃[α₃])`, shape `n₁ × k²`.
    fibers: Tensor,
    /// `cols[α₁, i₂, β₃] = T(I₁[α₁], i₂, I₃[β₃])`, shape `k² × n₂ × k`.
    cols: Tensor,
    /// `rows[α₁, β₂, i₃] = T(I₁[α₁], I₂[β₂], i₃)`, shape `k² × k × n₃`.
    rows: Tensor,
    /// `F(α₁,α₂,α₃)`: entry `((α₂,α₃), α₁)` of `T₁[I₁,J]⁻¹`.
    f: Tensor,
    /// `G(α₁,β₂,β₃)`: entry `(β₃, β₂)` of `Q(α₁)[I₂,I₃]⁻¹`.
    g: Tensor,
}

impl Cur3Factors {
    /// Samples the blocks of `t` and inverts the pivots. With
    /// [`PivotFallback::PseudoInverse`] singular pivots are pseudo-inverted
    /// instead of rejected.
    pub fn build(t: &Tensor, i1: &IndexSet, i2: &IndexSet, i3: &IndexSet, fallback: PivotFallback) -> Result<Self> {
        if t.order() != 3 {
            return Err(Error::Dimension(format!("3-mode tensor required, got shape {:?}", t.shape())));
        }
        let [n1, n2, n3] = [t.shape()[0], t.shape()[1], t.shape()[2]];
        let k = i2.len();
        check_set(i1, n1, k * k, "I₁")?;
        check_set(i2, n2, k, "I₂")?;
        check_set(i3, n3, k, "I₃")?;
        let (s1, s2, s3) = (i1.as_slice(), i2.as_slice(), i3.as_slice());
        let kk = k * k;

        let fibers = Tensor::from_fn(&[n1, kk], |ix| t.get(&[ix[0], s2[ix[1] / k], s3[ix[1] % k]]));
        let cols = Tensor::from_fn(&[kk, n2, k], |ix| t.get(&[s1[ix[0]], ix[1], s3[ix[2]]]));
        let rows = Tensor::from_fn(&[kk, k, n3], |ix| t.get(&[s1[ix[0]], s2[ix[1]], ix[2]]));

        let pivot = DMatrix::from_fn(kk, kk, |a1, c| fibers.get(&[s1[a1], c]));
        let inv = invert_pivot(&pivot, || "T₁[I₁,J]".into(), fallback)?;
        let f = Tensor::from_fn(&[kk, k, k], |ix| inv[(ix[1] * k + ix[2], ix[0])]);

        let mut g = Tensor::zeros(&[kk, k, k]);
        for (a1, &row) in s1.iter().enumerate() {
            let q = DMatrix::from_fn(k, k, |b2, b3| rows.get(&[a1, b2, s3[b3]]));
            let qinv = invert_pivot(&q, || format!("Q({row})[I₂,I₃]"), fallback)?;
            for b2 in 0..k {
                for b3 in 0..k {
                    g.set(&[a1, b2, b3], qinv[(b3, b2)]);
                }
            }
        }
        Ok(Self { shape: [n1, n2, n3], k, sets: [i1.clone(), i2.clone(), i3.clone()], fibers, cols, rows, f, g })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn index_sets(&self) -> &[IndexSet; 3] {
        &self.sets
    }

    pub fn f(&self) -> &Tensor {
        &self.f
    }

    pub fn g(&self) -> &Tensor {
        &self.g
    }

    /// Number of stored reals, `k²n₁ + k³(n₂+n₃) + 2k⁴`.
    pub fn storage_len(&self) -> usize {
        self.fibers.len() + self.cols.len() + self.rows.len() + self.f.len() + self.g.len()
    }

    /// Entry `B(i₁,i₂,i₃)`.
    pub fn entry(&self, i1: usize, i2: usize, i3: usize) -> Result<f64> {
        check_index(&self.shape, &[i1, i2, i3])?;
        let k = self.k;
        let mut acc = 0.0;
        for a1 in 0..k * k {
            let mut w = 0.0;
            for a2 in 0..k {
                for a3 in 0..k {
                    w += self.fibers.get(&[i1, a2 * k + a3]) * self.f.get(&[a1, a2, a3]);
                }
            }
            if w == 0.0 {
                continue;
            }
            let mut r = 0.0;
            for b2 in 0..k {
                for b3 in 0..k {
                    r += self.cols.get(&[a1, i2, b3]) * self.g.get(&[a1, b2, b3]) * self.rows.get(&[a1, b2, i3]);
                }
            }
            acc += w * r;
        }
        Ok(acc)
    }

    /// All entries of `B`, sharing the contractions across entries.
    pub fn reconstruct(&self) -> Tensor {
        let [n1, n2, n3] = self.shape;
        let k = self.k;
        let kk = k * k;
        let fib = DMatrix::from_row_slice(n1, kk, self.fibers.data());
        let fmat = DMatrix::from_fn(kk, kk, |c, a1| self.f.get(&[a1, c / k, c % k]));
        let w = fib * fmat;
        let mut out = DMatrix::<f64>::zeros(n1, n2 * n3);
        for a1 in 0..kk {
            let left = DMatrix::from_fn(n2, k, |i2, b3| self.cols.get(&[a1, i2, b3]));
            let ginv = DMatrix::from_fn(k, k, |b3, b2| self.g.get(&[a1, b2, b3]));
            let right = DMatrix::from_fn(k, n3, |b2, i3| self.rows.get(&[a1, b2, i3]));
            let r = left * ginv * right;
            let rflat = DMatrix::from_fn(1, n2 * n3, |_, c| r[(c / n3, c % n3)]);
            out += w.column(a1) * rflat;
        }
        Tensor::fold(&out, 0, &self.shape).expect("consistent shape")
    }

    /// Writes a manifest line followed by the stored blocks as binary
    /// containers in the order fibers, cols, rows, F, G.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", manifest("CUR3", self.k, &self.shape, &self.sets))?;
        for block in [&self.fibers, &self.cols, &self.rows, &self.f, &self.g] {
            write_binary(block, &mut w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(mut r: R) -> Result<Self> {
        let (k, shape, sets) = read_manifest(&mut r, "CUR3", 3)?;
        let mut blocks = (0..5).map(|_| read_binary_block(&mut r)).collect::<Result<Vec<_>>>()?.into_iter();
        let mut next = || blocks.next().expect("five blocks");
        let [s1, s2, s3]: [IndexSet; 3] = sets.try_into().expect("three sets");
        let f = Self {
            shape: [shape[0], shape[1], shape[2]],
            k,
            sets: [s1, s2, s3],
            fibers: next(),
            cols: next(),
            rows: next(),
            f: next(),
            g: next(),
        };
        let kk = k * k;
        let expected = [
            vec![shape[0], kk],
            vec![kk, shape[1], k],
            vec![kk, k, shape[2]],
            vec![kk, k, k],
            vec![kk, k, k],
        ];
        for (b, e) in [&f.fibers, &f.cols, &f.rows, &f.f, &f.g].iter().zip(&expected) {
            if b.shape() != e.as_slice() {
                return Err(Error::Parse(format!("block shape {:?}, expected {e:?}", b.shape())));
            }
        }
        Ok(f)
    }
}

/// Stored blocks of a 4-mode CUR approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct Cur4Factors {
    shape: [usize; 4],
    k: usize,
    sets: [IndexSet; 4],
    /// `y_cols[(α₃,α₄), i₁, β₂] = T(i₁, I₂[β₂], I₃[α₃], I₄[α₄])`.
    y_cols: Tensor,
    /// `y_rows[(α₃,α₄), β₁, i₂] = T(I₁[β₁], i₂, I₃[α₃], I₄[α₄])`.
    y_rows: Tensor,
    /// `z_cols[(α₁,α₂), i₃, β₄] = T(I₁[α₁], I₂[α₂], i₃, I₄[β₄])`.
    z_cols: Tensor,
    /// `z_rows[(α₁,α₂), β₃, i₄] = T(I₁[α₁], I₂[α₂], I₃[β₃], i₄)`.
    z_rows: Tensor,
    /// `F(β₁,β₂,α₃,α₄)`: entry `(β₂, β₁)` of `Y(α₃,α₄)[I₁,I₂]⁻¹`.
    f: Tensor,
    /// `G(α₁,α₂,β₃,β₄)`: entry `(β₄, β₃)` of `Z(α₁,α₂)[I₃,I₄]⁻¹`.
    g: Tensor,
    /// `H(α₁,α₂,α₃,α₄)`: entry `((α₃,α₄),(α₁,α₂))` of `X[J₁,J₂]⁻¹`.
    h: Tensor,
}

impl Cur4Factors {
    pub fn build(t: &Tensor, sets: [&IndexSet; 4], fallback: PivotFallback) -> Result<Self> {
        if t.order() != 4 {
            return Err(Error::Dimension(format!("4-mode tensor required, got shape {:?}", t.shape())));
        }
        let n = [t.shape()[0], t.shape()[1], t.shape()[2], t.shape()[3]];
        let k = sets[0].len();
        for (m, s) in sets.iter().enumerate() {
            check_set(s, n[m], k, &format!("I{}", m + 1))?;
        }
        let s: Vec<&[usize]> = sets.iter().map(|x| x.as_slice()).collect();
        let kk = k * k;
        let y_cols = Tensor::from_fn(&[kk, n[0], k], |ix| t.get(&[ix[1], s[1][ix[2]], s[2][ix[0] / k], s[3][ix[0] % k]]));
        let y_rows = Tensor::from_fn(&[kk, k, n[1]], |ix| t.get(&[s[0][ix[1]], ix[2], s[2][ix[0] / k], s[3][ix[0] % k]]));
        let z_cols = Tensor::from_fn(&[kk, n[2], k], |ix| t.get(&[s[0][ix[0] / k], s[1][ix[0] % k], ix[1], s[3][ix[2]]]));
        let z_rows = Tensor::from_fn(&[kk, k, n[3]], |ix| t.get(&[s[0][ix[0] / k], s[1][ix[0] % k], s[2][ix[1]], ix[2]]));

        let mut f = Tensor::zeros(&[k, k, k, k]);
        for c in 0..kk {
            let y = DMatrix::from_fn(k, k, |b1, b2| y_rows.get(&[c, b1, s[1][b2]]));
            let inv = invert_pivot(&y, || format!("Y({},{})[I₁,I₂]", s[2][c / k], s[3][c % k]), fallback)?;
            for b1 in 0..k {
                for b2 in 0..k {
                    f.set(&[b1, b2, c / k, c % k], inv[(b2, b1)]);
                }
            }
        }
        let mut g = Tensor::zeros(&[k, k, k, k]);
        for r in 0..kk {
            let z = DMatrix::from_fn(k, k, |b3, b4| z_rows.get(&[r, b3, s[3][b4]]));
            let inv = invert_pivot(&z, || format!("Z({},{})[I₃,I₄]", s[0][r / k], s[1][r % k]), fallback)?;
            for b3 in 0..k {
                for b4 in 0..k {
                    g.set(&[r / k, r % k, b3, b4], inv[(b4, b3)]);
                }
            }
        }
        let x = DMatrix::from_fn(kk, kk, |r, c| z_rows.get(&[r, c / k, s[3][c % k]]));
        let inv = invert_pivot(&x, || "X[J₁,J₂]".into(), fallback)?;
        let h = Tensor::from_fn(&[k, k, k, k], |ix| inv[(ix[2] * k + ix[3], ix[0] * k + ix[1])]);
        Ok(Self {
            shape: n,
            k,
            sets: [sets[0].clone(), sets[1].clone(), sets[2].clone(), sets[3].clone()],
            y_cols,
            y_rows,
            z_cols,
            z_rows,
            f,
            g,
            h,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn index_sets(&self) -> &[IndexSet; 4] {
        &self.sets
    }

    pub fn f(&self) -> &Tensor {
        &self.f
    }

    pub fn g(&self) -> &Tensor {
        &self.g
    }

    pub fn h(&self) -> &Tensor {
        &self.h
    }

    /// Number of stored reals, `k³(n₁+n₂+n₃+n₄+3k)`.
    pub fn storage_len(&self) -> usize {
        [&self.y_cols, &self.y_rows, &self.z_cols, &self.z_rows, &self.f, &self.g, &self.h].iter().map(|b| b.len()).sum()
    }

    fn y_hat(&self, c: usize, i1: usize, i2: usize) -> f64 {
        let k = self.k;
        let mut acc = 0.0;
        for b1 in 0..k {
            for b2 in 0..k {
                acc += self.y_cols.get(&[c, i1, b2]) * self.f.get(&[b1, b2, c / k, c % k]) * self.y_rows.get(&[c, b1, i2]);
            }
        }
        acc
    }

    fn z_hat(&self, r: usize, i3: usize, i4: usize) -> f64 {
        let k = self.k;
        let mut acc = 0.0;
        for b3 in 0..k {
            for b4 in 0..k {
                acc += self.z_cols.get(&[r, i3, b4]) * self.g.get(&[r / k, r % k, b3, b4]) * self.z_rows.get(&[r, b3, i4]);
            }
        }
        acc
    }

    /// Entry `B(i₁,i₂,i₃,i₄)`.
    pub fn entry(&self, i1: usize, i2: usize, i3: usize, i4: usize) -> Result<f64> {
        check_index(&self.shape, &[i1, i2, i3, i4])?;
        let k = self.k;
        let kk = k * k;
        let y: Vec<f64> = (0..kk).map(|c| self.y_hat(c, i1, i2)).collect();
        let z: Vec<f64> = (0..kk).map(|r| self.z_hat(r, i3, i4)).collect();
        let mut acc = 0.0;
        for (r, zr) in z.iter().enumerate() {
            for (c, yc) in y.iter().enumerate() {
                acc += yc * self.h.get(&[r / k, r % k, c / k, c % k]) * zr;
            }
        }
        Ok(acc)
    }

    pub fn reconstruct(&self) -> Tensor {
        let [n1, n2, n3, n4] = self.shape;
        let k = self.k;
        let kk = k * k;
        let block = |cols: &Tensor, rows: &Tensor, inv: &dyn Fn(usize, usize, usize) -> f64, p: usize, q: usize| {
            DMatrix::from_fn(p * q, kk, |pq, c| {
                let left = DMatrix::from_fn(1, k, |_, b| cols.get(&[c, pq / q, b]));
                let right = DMatrix::from_fn(k, 1, |b, _| rows.get(&[c, b, pq % q]));
                let mid = DMatrix::from_fn(k, k, |a, b| inv(c, a, b));
                (left * mid * right)[(0, 0)]
            })
        };
        // columns (α₃,α₄) of X̂[:,J₂] and rows (α₁,α₂) of X̂[J₁,:]
        let yh = block(&self.y_cols, &self.y_rows, &|c, b2, b1| self.f.get(&[b1, b2, c / k, c % k]), n1, n2);
        let zh = block(&self.z_cols, &self.z_rows, &|r, b4, b3| self.g.get(&[r / k, r % k, b3, b4]), n3, n4);
        let hmat = DMatrix::from_fn(kk, kk, |c, r| self.h.get(&[r / k, r % k, c / k, c % k]));
        let x = yh * hmat * zh.transpose();
        let data: Vec<f64> = (0..n1 * n2).flat_map(|r| x.row(r).iter().copied().collect::<Vec<_>>()).collect();
        Tensor::new(vec![n1, n2, n3, n4], data).expect("consistent shape")
    }

    /// Manifest line followed by the blocks `y_cols, y_rows, z_cols, z_rows,
    /// F, G, H` as binary containers.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", manifest("CUR4", self.k, &self.shape, &self.sets))?;
        for block in [&self.y_cols, &self.y_rows, &self.z_cols, &self.z_rows, &self.f, &self.g, &self.h] {
            write_binary(block, &mut w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(mut r: R) -> Result<Self> {
        let (k, shape, sets) = read_manifest(&mut r, "CUR4", 4)?;
        let mut blocks = (0..7).map(|_| read_binary_block(&mut r)).collect::<Result<Vec<_>>>()?.into_iter();
        let mut next = || blocks.next().expect("seven blocks");
        let [s1, s2, s3, s4]: [IndexSet; 4] = sets.try_into().expect("four sets");
        let f = Self {
            shape: [shape[0], shape[1], shape[2], shape[3]],
            k,
            sets: [s1, s2, s3, s4],
            y_cols: next(),
            y_rows: next(),
            z_cols: next(),
            z_rows: next(),
            f: next(),
            g: next(),
            h: next(),
        };
        let kk = k * k;
        let expected = [
            vec![kk, shape[0], k],
            vec![kk, k, shape[1]],
            vec![kk, shape[2], k],
            vec![kk, k, shape[3]],
            vec![k, k, k, k],
            vec![k, k, k, k],
            vec![k, k, k, k],
        ];
        for (b, e) in [&f.y_cols, &f.y_rows, &f.z_cols, &f.z_rows, &f.f, &f.g, &f.h].iter().zip(&expected) {
            if b.shape() != e.as_slice() {
                return Err(Error::Parse(format!("block shape {:?}, expected {e:?}", b.shape())));
            }
        }
        Ok(f)
    }
}

fn manifest(tag: &str, k: usize, shape: &[usize], sets: &[IndexSet]) -> String {
    let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
    let mut line = format!("{tag} k={k} shape={}", dims.join("x"));
    for (m, s) in sets.iter().enumerate() {
        let idx: Vec<String> = s.as_slice().iter().map(usize::to_string).collect();
        line.push_str(&format!(" I{}={}", m + 1, idx.join(",")));
    }
    line
}

fn read_manifest<R: BufRead>(r: &mut R, tag: &str, d: usize) -> Result<(usize, Vec<usize>, Vec<IndexSet>)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let mut fields = line.split_whitespace();
    if fields.next() != Some(tag) {
        return Err(Error::Parse(format!("expected {tag} manifest")));
    }
    let mut value = |key: &str| -> Result<String> {
        let f = fields.next().ok_or_else(|| Error::Parse(format!("manifest missing {key}")))?;
        f.strip_prefix(key)
            .and_then(|v| v.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| Error::Parse(format!("manifest field {f:?}, expected {key}=…")))
    };
    let parse_list = |s: &str, sep: char| -> Result<Vec<usize>> {
        s.split(sep).map(|x| x.parse().map_err(|e| Error::Parse(format!("bad integer {x:?}: {e}")))).collect()
    };
    let k: usize = value("k")?.parse().map_err(|e| Error::Parse(format!("bad k: {e}")))?;
    let shape = parse_list(&value("shape")?, 'x')?;
    if shape.len() != d {
        return Err(Error::Parse(format!("manifest shape has {} modes, expected {d}", shape.len())));
    }
    let sets = (0..d)
        .map(|m| IndexSet::new(parse_list(&value(&format!("I{}", m + 1))?, ',')?, shape[m]))
        .collect::<Result<Vec<_>>>()?;
    Ok((k, shape, sets))
}

/// Index sets for [`Cur3Factors::build`] from seeded random pivot searches:
/// `I₂`, `I₃` as the rows of good `k × k` pivots of the mode-2 and mode-3
/// unfoldings, then `I₁` as the rows of a good `k² × k²` pivot of `T₁[:,J]`.
pub fn choose_cur3_indices(t: &Tensor, k: usize, trials: usize, seed: u64) -> Result<[IndexSet; 3]> {
    if t.order() != 3 {
        return Err(Error::Dimension("3-mode tensor required".into()));
    }
    let i2 = pivot_search(&t.unfold(1)?, k, trials, PivotObjective::SigmaProduct, seed)?.rows;
    let i3 = pivot_search(&t.unfold(2)?, k, trials, PivotObjective::SigmaProduct, seed.wrapping_add(1))?.rows;
    let n1 = t.shape()[0];
    let fibers = DMatrix::from_fn(n1, k * k, |i, c| t.get(&[i, i2.as_slice()[c / k], i3.as_slice()[c % k]]));
    let i1 = pivot_search(&fibers, k * k, trials, PivotObjective::SigmaProduct, seed.wrapping_add(2))?.rows;
    Ok([i1, i2, i3])
}

/// Index sets for [`Cur4Factors::build`]: each `I_j` is the row set of a good
/// `k × k` pivot of the mode-`j` unfolding.
pub fn choose_cur4_indices(t: &Tensor, k: usize, trials: usize, seed: u64) -> Result<[IndexSet; 4]> {
    if t.order() != 4 {
        return Err(Error::Dimension("4-mode tensor required".into()));
    }
    let pick = |m: usize| -> Result<IndexSet> {
        Ok(pivot_search(&t.unfold(m)?, k, trials, PivotObjective::SigmaProduct, seed.wrapping_add(m as u64))?.rows)
    };
    Ok([pick(0)?, pick(1)?, pick(2)?, pick(3)?])
}

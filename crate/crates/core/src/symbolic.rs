//! Subshifts of finite type, one-block factor codes, the symbolic metric,
//! and the combinatorics of weighted Bowen balls.
//!
//! Everything here is exact: with the metric `d(x,y) = 2^(-min{i: x_i != y_i})`
//! on one-sided sequences and resolutions restricted to the grid `eps = 2^-k`,
//! a weighted Bowen ball is exactly a "weighted cylinder" - a constraint on a
//! prefix of the point plus a constraint on a window of its factor word. All
//! cover quantities downstream reduce to finite combinatorics over these
//! cylinders.

use crate::error::{Error, Result};
use serde::Serialize;

/// Largest alphabet we support. Realizability checks use u64 bitmasks.
pub const MAX_ALPHABET: usize = 64;

/// Hard depth cap for explicit cylinder enumeration.
pub const MAX_ENUM_LEN: usize = 30;

/// A finite symbol alphabet with distinct labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn numeric(size: usize) -> Result<Self> {
        Alphabet::new((0..size).map(|i| i.to_string()).collect())
    }

    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("alphabet must have size >= 1"));
        }
        if labels.len() > MAX_ALPHABET {
            return Err(Error::refusal(format!(
                "alphabet size {} exceeds cap {}",
                labels.len(),
                MAX_ALPHABET
            )));
        }
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                if labels[i] == labels[j] {
                    return Err(Error::invalid(format!("duplicate label {:?}", labels[i])));
                }
            }
        }
        Ok(Alphabet { labels })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// A subshift of finite type given by a 0/1 transition matrix.
/// Entry `(i, j)` true means the two-letter word `ij` is allowed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sft {
    alphabet: Alphabet,
    transitions: Vec<Vec<bool>>,
    /// Row bitmasks: successors[i] has bit j set iff i -> j allowed.
    successors: Vec<u64>,
}

/// Validated constructor for [`Sft`]; rejects non-square matrices and
/// stranded symbols (empty row or column).
pub fn make_sft(alphabet_size: usize, transitions: Vec<Vec<bool>>) -> Result<Sft> {
    Sft::new(Alphabet::numeric(alphabet_size)?, transitions)
}

impl Sft {
    pub fn new(alphabet: Alphabet, transitions: Vec<Vec<bool>>) -> Result<Self> {
        let n = alphabet.size();
        if transitions.len() != n || transitions.iter().any(|row| row.len() != n) {
            return Err(Error::invalid(format!(
                "transition matrix must be {n}x{n} to match the alphabet"
            )));
        }
        for (i, row) in transitions.iter().enumerate() {
            if row.iter().all(|&b| !b) {
                return Err(Error::invalid(format!("stranded symbol {i}: empty row")));
            }
        }
        for j in 0..n {
            if (0..n).all(|i| !transitions[i][j]) {
                return Err(Error::invalid(format!("stranded symbol {j}: empty column")));
            }
        }
        let successors = transitions
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold(0u64, |m, (j, &b)| if b { m | (1 << j) } else { m })
            })
            .collect();
        Ok(Sft {
            alphabet,
            transitions,
            successors,
        })
    }

    /// The full shift on `size` symbols.
    pub fn full_shift(size: usize) -> Result<Self> {
        make_sft(size, vec![vec![true; size]; size])
    }

    /// The golden-mean shift: `11` forbidden.
    pub fn golden_mean() -> Self {
        make_sft(2, vec![vec![true, true], vec![true, false]]).expect("static matrix is valid")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.size()
    }

    pub fn allowed(&self, from: u8, to: u8) -> bool {
        self.transitions[from as usize][to as usize]
    }

    pub fn transitions(&self) -> &[Vec<bool>] {
        &self.transitions
    }

    pub fn successor_mask(&self, from: u8) -> u64 {
        self.successors[from as usize]
    }

    pub fn is_full_shift(&self) -> bool {
        self.transitions.iter().flatten().all(|&b| b)
    }

    pub fn is_admissible(&self, word: &[u8]) -> bool {
        if word.iter().any(|&s| (s as usize) >= self.size()) {
            return false;
        }
        word.windows(2).all(|w| self.allowed(w[0], w[1]))
    }

    /// Number of admissible words of the given length (transfer-matrix count).
    pub fn count_words(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        self.count_words_by_last(len).iter().sum()
    }

    /// Number of admissible words of the given length ending at each symbol.
    pub fn count_words_by_last(&self, len: usize) -> Vec<u128> {
        let n = self.size();
        let mut counts = vec![1u128; n];
        for _ in 1..len {
            let mut next = vec![0u128; n];
            for i in 0..n {
                if counts[i] == 0 {
                    continue;
                }
                for j in 0..n {
                    if self.transitions[i][j] {
                        next[j] += counts[i];
                    }
                }
            }
            counts = next;
        }
        counts
    }

    /// All admissible words of the given length, lexicographic order.
    pub fn enumerate_words(&self, len: usize) -> Result<Vec<Vec<u8>>> {
        if len > MAX_ENUM_LEN {
            return Err(Error::refusal(format!(
                "word enumeration at length {len} exceeds cap {MAX_ENUM_LEN}"
            )));
        }
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(len);
        self.enumerate_rec(len, &mut word, &mut out);
        Ok(out)
    }

    fn enumerate_rec(&self, len: usize, word: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if word.len() == len {
            out.push(word.clone());
            return;
        }
        for s in 0..self.size() as u8 {
            if word.last().is_none_or(|&p| self.allowed(p, s)) {
                word.push(s);
                self.enumerate_rec(len, word, out);
                word.pop();
            }
        }
    }
}

/// A one-block factor code between subshifts: a per-symbol relabeling that
/// commutes with the transition structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorCode {
    table: Vec<u8>,
    target_size: usize,
}

impl FactorCode {
    /// Validates surjectivity onto the target alphabet and commutation:
    /// if `ij` is allowed in the source then `table(i)table(j)` is allowed
    /// in the target.
    pub fn new(table: Vec<u8>, source: &Sft, target: &Sft) -> Result<Self> {
        if table.len() != source.size() {
            return Err(Error::invalid(format!(
                "factor table has {} entries, source alphabet has {}",
                table.len(),
                source.size()
            )));
        }
        let m = target.size();
        if table.iter().any(|&t| (t as usize) >= m) {
            return Err(Error::invalid("factor table maps outside target alphabet"));
        }
        for t in 0..m as u8 {
            if !table.contains(&t) {
                return Err(Error::invalid(format!(
                    "factor table not surjective: target symbol {t} unused"
                )));
            }
        }
        for i in 0..source.size() as u8 {
            for j in 0..source.size() as u8 {
                if source.allowed(i, j) && !target.allowed(table[i as usize], table[j as usize]) {
                    return Err(Error::invalid(format!(
                        "factor does not commute with transitions: {i}{j} allowed \
                         but image {}{} is not",
                        table[i as usize], table[j as usize]
                    )));
                }
            }
        }
        Ok(FactorCode {
            table,
            target_size: m,
        })
    }

    pub fn identity(size: usize) -> Self {
        FactorCode {
            table: (0..size as u8).collect(),
            target_size: size,
        }
    }

    pub fn apply(&self, symbol: u8) -> u8 {
        self.table[symbol as usize]
    }

    pub fn apply_word(&self, word: &[u8]) -> Vec<u8> {
        word.iter().map(|&s| self.apply(s)).collect()
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &t)| i as u8 == t)
    }

    /// Source symbols in each target fiber (the "columns" of the code).
    pub fn fibers(&self) -> Vec<Vec<u8>> {
        let mut fibers = vec![Vec::new(); self.target_size];
        for (s, &t) in self.table.iter().enumerate() {
            fibers[t as usize].push(s as u8);
        }
        fibers
    }
}

/// The weight pair `a = (a1, a2)` with `a1 > 0`, `a2 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightVector {
    pub a1: f64,
    pub a2: f64,
}

impl WeightVector {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        if !(a1 > 0.0) || !a1.is_finite() {
            return Err(Error::invalid(format!("a1 must be > 0, got {a1}")));
        }
        if !(a2 >= 0.0) || !a2.is_finite() {
            return Err(Error::invalid(format!("a2 must be >= 0, got {a2}")));
        }
        Ok(WeightVector { a1, a2 })
    }

    pub fn scaled(self, c: f64) -> Result<Self> {
        WeightVector::new(self.a1 * c, self.a2 * c)
    }
}

/// Least integer not less than `v`, with a one-sided 1e-9 guard against
/// floating-point values sitting just above an exact integer.
pub(crate) fn ceil_tol(v: f64) -> usize {
    (v - 1e-9).ceil().max(0.0) as usize
}

/// The combinatorial shadow of a weighted Bowen ball `B^a(x, n, 2^-k)`:
/// agreement of the point on `[0, len1)` and of its factor word on
/// `[0, len2)` (equivalently on `[len1, len2)`, the rest being implied).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WeightedBallSpec {
    pub order_n: usize,
    pub resolution_k: usize,
    pub len1: usize,
    pub len2: usize,
}

/// Window lengths of the order-`n`, resolution-`2^-k` weighted ball:
/// `len1 = ceil(a1 n) + k`, `len2 = ceil((a1+a2) n) + k`.
pub fn ball_spec(a: WeightVector, n: usize, k: usize) -> Result<WeightedBallSpec> {
    if n == 0 {
        return Err(Error::invalid("ball order n must be >= 1"));
    }
    let len1 = ceil_tol(a.a1 * n as f64) + k;
    let len2 = ceil_tol((a.a1 + a.a2) * n as f64) + k;
    debug_assert!(len2 >= len1 && len1 >= 1);
    Ok(WeightedBallSpec {
        order_n: n,
        resolution_k: k,
        len1,
        len2,
    })
}

/// `d(x, y) = 2^-m` where `m` is the first index of disagreement; 0 if the
/// words agree up to `depth`.
pub fn symbolic_distance(x: &[u8], y: &[u8], depth: usize) -> f64 {
    debug_assert!(x.len() >= depth && y.len() >= depth);
    for m in 0..depth {
        if x[m] != y[m] {
            return 0.5_f64.powi(m as i32);
        }
    }
    0.0
}

/// A pair of SFTs joined by a one-block factor code. Houses the fiber
/// system, the base system, and the projection between them.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolicSystem {
    source: Sft,
    target: Sft,
    code: FactorCode,
}

/// A nonempty weighted cylinder: all points with the given prefix whose
/// factor word matches `window` on `[len1, len2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightedCylinder {
    pub prefix: Vec<u8>,
    pub window: Vec<u8>,
}

impl SymbolicSystem {
    pub fn new(source: Sft, target: Sft, code_table: Vec<u8>) -> Result<Self> {
        let code = FactorCode::new(code_table, &source, &target)?;
        Ok(SymbolicSystem {
            source,
            target,
            code,
        })
    }

    /// A system whose factor is itself under the identity code.
    pub fn identity(sft: Sft) -> Self {
        let code = FactorCode::identity(sft.size());
        SymbolicSystem {
            target: sft.clone(),
            source: sft,
            code,
        }
    }

    pub fn source(&self) -> &Sft {
        &self.source
    }

    pub fn target(&self) -> &Sft {
        &self.target
    }

    pub fn code(&self) -> &FactorCode {
        &self.code
    }

    /// Membership of `y` in the weighted ball centered at `center`:
    /// agreement on `[0, len1)` of the words and on `[0, len2)` of their
    /// factor words.
    pub fn in_weighted_ball(
        &self,
        center: &[u8],
        y: &[u8],
        spec: &WeightedBallSpec,
    ) -> Result<bool> {
        if center.len() < spec.len2 || y.len() < spec.len2 {
            return Err(Error::invalid(format!(
                "words must have length >= len2 = {}, got {} and {}",
                spec.len2,
                center.len(),
                y.len()
            )));
        }
        let first = center[..spec.len1] == y[..spec.len1];
        let second = (0..spec.len2).all(|j| self.code.apply(center[j]) == self.code.apply(y[j]));
        Ok(first && second)
    }

    /// Is there an admissible path of length `window.len()` starting after
    /// `last` whose factor word equals `window`? Bitmask forward search.
    pub fn window_realizable(&self, last: u8, window: &[u8]) -> bool {
        let mut frontier: u64 = 1 << last;
        for &c in window {
            let mut next = 0u64;
            let mut f = frontier;
            while f != 0 {
                let i = f.trailing_zeros() as u8;
                f &= f - 1;
                next |= self.source.successor_mask(i);
            }
            next &= self.column_mask(c);
            if next == 0 {
                return false;
            }
            frontier = next;
        }
        true
    }

    /// Bitmask of source symbols coded to `target_symbol`.
    pub fn column_mask(&self, target_symbol: u8) -> u64 {
        let mut m = 0u64;
        for s in 0..self.source.size() as u8 {
            if self.code.apply(s) == target_symbol {
                m |= 1 << s;
            }
        }
        m
    }

    /// All nonempty weighted cylinders of the given spec, in lexicographic
    /// order of `(prefix, window)`. They partition the system.
    pub fn enumerate_weighted_cylinders(
        &self,
        spec: &WeightedBallSpec,
    ) -> Result<Vec<WeightedCylinder>> {
        if spec.len2 > MAX_ENUM_LEN {
            return Err(Error::refusal(format!(
                "cylinder enumeration at depth {} exceeds cap {MAX_ENUM_LEN}",
                spec.len2
            )));
        }
        let prefixes = self.source.enumerate_words(spec.len1)?;
        let mut out = Vec::new();
        for prefix in prefixes {
            let last = *prefix.last().expect("len1 >= 1");
            let mut window = Vec::new();
            self.enumerate_windows_rec(last, spec.len2 - spec.len1, &mut window, &prefix, &mut out);
        }
        Ok(out)
    }

    fn enumerate_windows_rec(
        &self,
        last: u8,
        remaining: usize,
        window: &mut Vec<u8>,
        prefix: &[u8],
        out: &mut Vec<WeightedCylinder>,
    ) {
        if remaining == 0 {
            out.push(WeightedCylinder {
                prefix: prefix.to_vec(),
                window: window.clone(),
            });
            return;
        }
        for c in 0..self.target.size() as u8 {
            window.push(c);
            if self.window_realizable(last, window) {
                self.enumerate_windows_rec(last, remaining - 1, window, prefix, out);
            }
            window.pop();
        }
    }

    /// The weighted cylinder containing the given word at this spec.
    pub fn cylinder_of(&self, word: &[u8], spec: &WeightedBallSpec) -> Result<WeightedCylinder> {
        if word.len() < spec.len2 {
            return Err(Error::invalid(format!(
                "word of length {} too short for len2 = {}",
                word.len(),
                spec.len2
            )));
        }
        Ok(WeightedCylinder {
            prefix: word[..spec.len1].to_vec(),
            window: word[spec.len1..spec.len2]
                .iter()
                .map(|&s| self.code.apply(s))
                .collect(),
        })
    }
}

//! Cayley graphs with unit edges: free groups, free abelian groups and finite
//! groups given by multiplication tables.
//!
//! Group elements are represented by [`Word`]s in a canonical geodesic normal
//! form, so the word length of the canonical form is the word-metric distance
//! to the identity.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::{Backend, GeodesicProjection, MetricSpace, PointSampler, Projection};

/// Default cap on the number of vertices a single enumeration may visit.
pub const DEFAULT_VERTEX_BUDGET: usize = 10_000_000;

/// A word over signed generator indices: `+i` is the i-th generator
/// (1-based), `-i` its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn letter(g: i32) -> Self {
        Word(vec![g])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    /// Free reduction: cancels adjacent `g g⁻¹` pairs.
    pub fn free_reduce(letters: impl IntoIterator<Item = i32>) -> Self {
        let mut out: Vec<i32> = Vec::new();
        for g in letters {
            if out.last() == Some(&-g) {
                out.pop();
            } else {
                out.push(g);
            }
        }
        Word(out)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn formal_inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|g| -g).collect())
    }

    /// Letter notation: `a`, `b`, ... for generators, `A`, `B`, ... for
    /// inverses, `e` for the empty word.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" || s == "1" {
            return Ok(Word::identity());
        }
        let mut letters = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let g = match ch {
                'a'..='z' if ch != 'e' => letter_index(ch, 'a'),
                'A'..='Z' if ch != 'E' => -letter_index(ch, 'A'),
                _ => return Err(Error::Parse(format!("invalid letter '{ch}' in word '{s}'"))),
            };
            letters.push(g);
        }
        Ok(Word(letters))
    }

    /// Word a₁^{e₁} a₂^{e₂} ... for an exponent vector.
    pub fn from_exponents(exponents: &[i64]) -> Self {
        let mut letters = Vec::new();
        for (i, &e) in exponents.iter().enumerate() {
            let g = (i + 1) as i32;
            let s = if e >= 0 { g } else { -g };
            letters.extend(std::iter::repeat_n(s, e.unsigned_abs() as usize));
        }
        Word(letters)
    }
}

// 'e' is reserved for the identity, so generator 5 is written 'f'.
fn letter_index(ch: char, base: char) -> i32 {
    let mut i = ch as i32 - base as i32 + 1;
    if i >= 5 {
        i -= 1;
    }
    i
}

fn letter_char(g: i32) -> char {
    let mut i = g.unsigned_abs();
    if i >= 5 {
        i += 1;
    }
    let base = if g > 0 { b'a' } else { b'A' };
    char::from(base + (i - 1) as u8)
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for &g in &self.0 {
            if g.unsigned_abs() <= 25 {
                write!(f, "{}", letter_char(g))?;
            } else {
                write!(f, "[{g}]")?;
            }
        }
        Ok(())
    }
}

/// A finite group given by its multiplication table and a generating list.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    generators: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
    /// Shortlex geodesic word of each element.
    normal_forms: Vec<Word>,
}

impl FiniteGroup {
    /// Parses `n=<order> k=<generators>`, then n rows of n comma-separated
    /// element indices (row i, column j = i·j), then a line of k generator
    /// indices.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty group table".into()))?;
        let (mut n, mut k) = (None, None);
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field '{field}'")))?;
            let value: usize = value.parse().map_err(|_| Error::Parse(format!("bad header value '{field}'")))?;
            match key {
                "n" => n = Some(value),
                "k" => k = Some(value),
                _ => return Err(Error::Parse(format!("unknown header key '{key}'"))),
            }
        }
        let n = n.ok_or_else(|| Error::Parse("header missing n=<order>".into()))?;
        let k = k.ok_or_else(|| Error::Parse("header missing k=<generators>".into()))?;
        if n == 0 {
            return Err(Error::Parse("group order must be positive".into()));
        }
        let parse_row = |line: &str, expected: usize, what: &str| -> Result<Vec<usize>> {
            let row: Vec<usize> = line
                .split([',', ' ', '\t'])
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad index '{t}' in {what}"))))
                .collect::<Result<_>>()?;
            if row.len() != expected {
                return Err(Error::Parse(format!("{what} has {} entries, expected {expected}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&e| e >= n) {
                return Err(Error::Parse(format!("element index {bad} out of range in {what}")));
            }
            Ok(row)
        };
        let mut table = Vec::with_capacity(n);
        for i in 0..n {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing table row {i}")))?;
            table.push(parse_row(line, n, &format!("row {i}"))?);
        }
        let gen_line = lines.next().ok_or_else(|| Error::Parse("missing generator line".into()))?;
        let generators = parse_row(gen_line, k, "generator line")?;
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after generator line".into()));
        }
        Self::from_table(table, generators)
    }

    pub fn from_table(table: Vec<Vec<usize>>, generators: Vec<usize>) -> Result<Self> {
        let n = table.len();
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or_else(|| Error::Parse("table has no identity element".into()))?;
        for (i, row) in table.iter().enumerate() {
            let mut seen = vec![false; n];
            for &x in row {
                if std::mem::replace(&mut seen[x], true) {
                    return Err(Error::Parse(format!("row {i} is not a permutation")));
                }
            }
        }
        let mut inverse = vec![usize::MAX; n];
        for x in 0..n {
            inverse[x] = (0..n)
                .find(|&y| table[x][y] == identity)
                .ok_or_else(|| Error::Parse(format!("element {x} has no inverse")))?;
        }
        if n <= 300 {
            for a in 0..n {
                for b in 0..n {
                    let ab = table[a][b];
                    for c in 0..n {
                        if table[ab][c] != table[a][table[b][c]] {
                            return Err(Error::Parse(format!("table is not associative at ({a},{b},{c})")));
                        }
                    }
                }
            }
        }
        let mut group = FiniteGroup { table, generators, identity, inverse, normal_forms: Vec::new() };
        group.normal_forms = group.compute_normal_forms()?;
        Ok(group)
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    fn letter_element(&self, g: i32) -> usize {
        let e = self.generators[g.unsigned_abs() as usize - 1];
        if g > 0 {
            e
        } else {
            self.inverse[e]
        }
    }

    pub fn evaluate(&self, w: &Word) -> usize {
        w.0.iter().fold(self.identity, |acc, &g| self.table[acc][self.letter_element(g)])
    }

    fn compute_normal_forms(&self) -> Result<Vec<Word>> {
        let n = self.order();
        let k = self.generators.len() as i32;
        let mut forms: Vec<Option<Word>> = vec![None; n];
        forms[self.identity] = Some(Word::identity());
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            let wx = forms[x].clone().expect("queued elements have forms");
            for g in generator_letters(k as usize) {
                let y = self.table[x][self.letter_element(g)];
                if forms[y].is_none() {
                    let mut w = wx.clone();
                    w.0.push(g);
                    forms[y] = Some(w);
                    queue.push_back(y);
                }
            }
        }
        forms
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Parse("generators do not generate the group".into()))
    }
}

/// Generator letters in expansion order a, A, b, B, ...
pub fn generator_letters(k: usize) -> impl Iterator<Item = i32> {
    (1..=k as i32).flat_map(|g| [g, -g])
}

#[derive(Debug, Clone)]
pub enum GroupKind {
    Free,
    Abelian,
    Table(Arc<FiniteGroup>),
}

/// Cayley graph of a finitely generated group with unit edge lengths.
#[derive(Debug, Clone)]
pub struct CayleySpace {
    kind: GroupKind,
    rank: usize,
    vertex_budget: usize,
}

impl CayleySpace {
    pub fn free(k: usize) -> Self {
        CayleySpace { kind: GroupKind::Free, rank: k, vertex_budget: DEFAULT_VERTEX_BUDGET }
    }

    pub fn abelian(k: usize) -> Self {
        CayleySpace { kind: GroupKind::Abelian, rank: k, vertex_budget: DEFAULT_VERTEX_BUDGET }
    }

    pub fn table(group: FiniteGroup) -> Self {
        let rank = group.generator_count();
        CayleySpace { kind: GroupKind::Table(Arc::new(group)), rank, vertex_budget: DEFAULT_VERTEX_BUDGET }
    }

    /// Parses `free:k`, `abelian:k` or `table:PATH`.
    pub fn parse(descriptor: &str) -> Result<Self> {
        let (kind, arg) = descriptor
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad group descriptor '{descriptor}'")))?;
        let rank = || arg.parse::<usize>().map_err(|_| Error::Parse(format!("bad rank in '{descriptor}'")));
        match kind {
            "free" => Ok(Self::free(rank()?)),
            "abelian" => Ok(Self::abelian(rank()?)),
            "table" => Self::from_table_file(arg),
            _ => Err(Error::Parse(format!("unknown group kind '{kind}'"))),
        }
    }

    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read group table {}: {e}", path.display())))?;
        Ok(Self::table(FiniteGroup::parse(&text)?))
    }

    pub fn with_vertex_budget(mut self, budget: usize) -> Self {
        self.vertex_budget = budget;
        self
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_free(&self) -> bool {
        matches!(self.kind, GroupKind::Free)
    }

    pub fn descriptor(&self) -> String {
        match &self.kind {
            GroupKind::Free => format!("free:{}", self.rank),
            GroupKind::Abelian => format!("abelian:{}", self.rank),
            GroupKind::Table(g) => format!("table(order {})", g.order()),
        }
    }

    fn check_letters(&self, w: &Word) -> Result<()> {
        match w.0.iter().find(|g| **g == 0 || g.unsigned_abs() as usize > self.rank) {
            Some(g) => Err(Error::Domain(format!("generator index {g} out of range for rank {}", self.rank))),
            None => Ok(()),
        }
    }

    /// Canonical geodesic normal form of the element represented by `w`.
    pub fn canonical(&self, w: &Word) -> Result<Word> {
        self.check_letters(w)?;
        Ok(self.canonical_unchecked(w.0.iter().copied()))
    }

    fn canonical_unchecked(&self, letters: impl IntoIterator<Item = i32>) -> Word {
        match &self.kind {
            GroupKind::Free => Word::free_reduce(letters),
            GroupKind::Abelian => {
                let mut exps = vec![0i64; self.rank];
                for g in letters {
                    exps[g.unsigned_abs() as usize - 1] += g.signum() as i64;
                }
                Word::from_exponents(&exps)
            }
            GroupKind::Table(group) => {
                let w = Word(letters.into_iter().collect());
                group.normal_forms[group.evaluate(&w)].clone()
            }
        }
    }

    /// Exponent vector of an element of a free abelian group.
    pub fn exponents(&self, w: &Word) -> Vec<i64> {
        let mut exps = vec![0i64; self.rank];
        for &g in &w.0 {
            exps[g.unsigned_abs() as usize - 1] += g.signum() as i64;
        }
        exps
    }

    pub fn multiply(&self, u: &Word, v: &Word) -> Word {
        self.canonical_unchecked(u.0.iter().chain(v.0.iter()).copied())
    }

    pub fn inverse(&self, u: &Word) -> Word {
        self.canonical_unchecked(u.formal_inverse().0)
    }

    /// |w|_Σ: length of the canonical geodesic form.
    pub fn word_length(&self, w: &Word) -> Result<u64> {
        Ok(self.canonical(w)?.len() as u64)
    }

    /// d_Σ(u, v) = |u⁻¹v|_Σ.
    pub fn word_distance(&self, u: &Word, v: &Word) -> Result<u64> {
        self.check_letters(u)?;
        self.check_letters(v)?;
        Ok(self.canonical_unchecked(u.formal_inverse().0.into_iter().chain(v.0.iter().copied())).len() as u64)
    }

    pub fn neighbors<'a>(&'a self, w: &'a Word) -> impl Iterator<Item = Word> + 'a {
        generator_letters(self.rank).map(move |g| self.canonical_unchecked(w.0.iter().copied().chain([g])))
    }

    /// Exact number of vertices at distance ≤ `radius` from `center`.
    ///
    /// Uses the exact growth series for free and free abelian groups and a
    /// BFS over the finite Cayley graph for table groups. Left translation is
    /// an isometry, so the count does not depend on the center.
    pub fn ball_count(&self, center: &Word, radius: u64) -> Result<u64> {
        self.check_letters(center)?;
        match &self.kind {
            GroupKind::Free => free_ball_count(self.rank as u64, radius),
            GroupKind::Abelian => abelian_ball_count(self.rank as u64, radius),
            GroupKind::Table(group) => Ok(group.normal_forms.iter().filter(|w| w.len() as u64 <= radius).count() as u64),
        }
    }

    /// Sphere sizes |S(center, r)| for r = 0..=radius, by layer BFS.
    ///
    /// Only three consecutive layers are kept: in a Cayley graph with a
    /// symmetric generating set the neighbors of layer r lie in layers
    /// r−1, r, r+1.
    pub fn bfs_sphere_sizes(&self, center: &Word, radius: u64) -> Result<Vec<u64>> {
        let center = self.canonical(center)?;
        let mut sizes = vec![1u64];
        let mut previous: HashSet<Word> = HashSet::new();
        let mut current: HashSet<Word> = HashSet::from([center]);
        let mut visited = 1usize;
        for _ in 0..radius {
            let mut next = HashSet::new();
            for w in &current {
                for nb in self.neighbors(w) {
                    if !previous.contains(&nb) && !current.contains(&nb) {
                        next.insert(nb);
                    }
                }
            }
            visited += next.len();
            if visited > self.vertex_budget {
                return Err(Error::Budget(format!("ball enumeration exceeds {} vertices", self.vertex_budget)));
            }
            sizes.push(next.len() as u64);
            previous = std::mem::replace(&mut current, next);
        }
        Ok(sizes)
    }

    /// Vertices of the closed ball B̄(center, radius) in BFS discovery order,
    /// each with its distance to the center. Generators are expanded in the
    /// order a, A, b, B, ...
    pub fn freeze(&self, center: &Word, radius: u64) -> Result<FrozenBall> {
        let center = self.canonical(center)?;
        let mut order: Vec<(Word, u64)> = vec![(center.clone(), 0)];
        let mut seen: HashSet<Word> = HashSet::from([center]);
        let mut head = 0;
        while head < order.len() {
            let (w, d) = order[head].clone();
            head += 1;
            if d == radius {
                continue;
            }
            for nb in self.neighbors(&w) {
                if seen.insert(nb.clone()) {
                    if order.len() >= self.vertex_budget {
                        return Err(Error::Budget(format!(
                            "ball enumeration exceeds {} vertices",
                            self.vertex_budget
                        )));
                    }
                    order.push((nb, d + 1));
                }
            }
        }
        Ok(FrozenBall { radius, vertices: order })
    }

    /// A geodesic vertex path from `u` to `v`.
    ///
    /// BFS from `u` with parent tracking and ordered generator expansion, so
    /// ties are broken by generator index. In a free group the geodesic is
    /// unique and is read off the reduced words directly.
    pub fn graph_geodesic(&self, u: &Word, v: &Word) -> Result<Vec<Word>> {
        let u = self.canonical(u)?;
        let v = self.canonical(v)?;
        if let GroupKind::Free = self.kind {
            // u → common prefix → v
            let common = u.0.iter().zip(&v.0).take_while(|(a, b)| a == b).count();
            let mut path = Vec::with_capacity(u.len() + v.len() - 2 * common + 1);
            for l in (common..=u.len()).rev() {
                path.push(Word(u.0[..l].to_vec()));
            }
            for l in common + 1..=v.len() {
                path.push(Word(v.0[..l].to_vec()));
            }
            return Ok(path);
        }
        let mut parent: HashMap<Word, Option<Word>> = HashMap::from([(u.clone(), None)]);
        let mut queue = VecDeque::from([u.clone()]);
        while let Some(w) = queue.pop_front() {
            if w == v {
                break;
            }
            for nb in self.neighbors(&w) {
                if !parent.contains_key(&nb) {
                    if parent.len() >= self.vertex_budget {
                        return Err(Error::Budget(format!("geodesic search exceeds {} vertices", self.vertex_budget)));
                    }
                    parent.insert(nb.clone(), Some(w.clone()));
                    queue.push_back(nb);
                }
            }
        }
        let mut path = vec![v.clone()];
        let mut cur = v;
        while let Some(Some(p)) = parent.get(&cur) {
            path.push(p.clone());
            cur = p.clone();
        }
        path.reverse();
        Ok(path)
    }
}

/// 1 + 2k((2k−1)^R − 1)/(2k−2) for k ≥ 2, 2R+1 for k = 1.
pub fn free_ball_count(k: u64, radius: u64) -> Result<u64> {
    let overflow = || Error::Budget(format!("ball count of free:{k} at radius {radius} overflows u64"));
    match k {
        0 => Ok(1),
        1 => 2u64.checked_mul(radius).and_then(|x| x.checked_add(1)).ok_or_else(overflow),
        _ => {
            let base = 2 * k - 1;
            let pow = u32::try_from(radius).ok().and_then(|r| base.checked_pow(r)).ok_or_else(overflow)?;
            Ok(1 + 2 * k * ((pow - 1) / (2 * k - 2)))
        }
    }
}

/// Σᵢ 2ⁱ C(k,i) C(R,i): lattice points of ℤᵏ with L¹ norm ≤ R.
pub fn abelian_ball_count(k: u64, radius: u64) -> Result<u64> {
    let overflow = || Error::Budget(format!("ball count of abelian:{k} at radius {radius} overflows u64"));
    let mut total: u128 = 0;
    for i in 0..=k.min(radius) {
        let term = (1u128 << i)
            .checked_mul(binomial(k, i).ok_or_else(overflow)?)
            .and_then(|t| t.checked_mul(binomial(radius, i)?))
            .ok_or_else(overflow)?;
        total = total.checked_add(term).ok_or_else(overflow)?;
    }
    u64::try_from(total).map_err(|_| overflow())
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Read-only snapshot of a closed ball, safe to share across threads.
#[derive(Debug, Clone)]
pub struct FrozenBall {
    pub radius: u64,
    /// Vertices in BFS discovery order with their distance to the center.
    pub vertices: Vec<(Word, u64)>,
}

impl FrozenBall {
    /// Number of vertices at distance ≤ r.
    pub fn count_within(&self, r: u64) -> u64 {
        self.vertices.iter().filter(|(_, d)| *d <= r).count() as u64
    }
}

impl MetricSpace for CayleySpace {
    type Point = Word;

    fn backend(&self) -> Backend {
        Backend::Graph
    }

    fn distance(&self, p: &Word, q: &Word) -> Result<f64> {
        Ok(self.word_distance(p, q)? as f64)
    }

    /// Vertex at integer arclength ⌊t⌋ along [`CayleySpace::graph_geodesic`].
    fn geodesic_point(&self, p: &Word, q: &Word, t: f64) -> Result<Word> {
        let path = self.graph_geodesic(p, q)?;
        if !(-1e-9..=(path.len() - 1) as f64 + 1e-9).contains(&t) {
            return Err(Error::Domain(format!("arclength {t} outside [0, {}]", path.len() - 1)));
        }
        let idx = ((t + 1e-9).floor().max(0.0) as usize).min(path.len() - 1);
        Ok(path[idx].clone())
    }
}

impl GeodesicProjection for CayleySpace {
    /// A geodesic given by its vertex path.
    type Geodesic = Vec<Word>;

    /// Exhaustive scan; the first vertex in path order attaining the minimum.
    fn project(&self, x: &Word, geodesic: &Vec<Word>) -> Result<Projection<Word>> {
        let mut best: Option<Projection<Word>> = None;
        for v in geodesic {
            let d = self.distance(x, v)?;
            if best.as_ref().is_none_or(|b| d < b.dist) {
                best = Some(Projection { foot: v.clone(), dist: d });
            }
        }
        best.ok_or_else(|| Error::Precondition("empty geodesic".into()))
    }
}

/// Uniform random length in 0..=max_len, then uniform letters, canonicalized.
/// For free groups the letters are drawn without immediate cancellation so
/// the result has exactly the drawn length.
pub struct WordSampler<'a> {
    pub space: &'a CayleySpace,
    pub max_len: usize,
}

impl PointSampler<Word> for WordSampler<'_> {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Word {
        let len = rng.random_range(0..=self.max_len);
        let k = self.space.rank() as i32;
        let mut letters: Vec<i32> = Vec::with_capacity(len);
        while letters.len() < len {
            let g = rng.random_range(1..=k) * if rng.random_bool(0.5) { 1 } else { -1 };
            if self.space.is_free() && letters.last() == Some(&-g) {
                continue;
            }
            letters.push(g);
        }
        self.space.canonical_unchecked(letters)
    }

    fn population(&self) -> Option<usize> {
        match self.space.kind() {
            GroupKind::Table(g) => Some(g.order()),
            _ if self.space.rank() == 0 => Some(1),
            _ => None,
        }
    }
}

/// Axis of the generator `g` in the free group: the vertices g^k, |k| ≤ half_len.
pub fn power_line(space: &CayleySpace, g: i32, half_len: i64) -> Vec<Word> {
    (-half_len..=half_len)
        .map(|k| space.canonical_unchecked(std::iter::repeat_n(if k >= 0 { g } else { -g }, k.unsigned_abs() as usize)))
        .collect()
}

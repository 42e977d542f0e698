//! Functional-equation systems `a = F(x, a, u)` and the rooted equation
//! `r = G(x, u, a)` built from a class partition.
//!
//! Polynomials are sparse over monomials `x^α u^κ E^δ Π a_j^{l_j}` where `E`
//! stands for `exp(a_0 + … + a_L)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::algebra::{parse_rat, rat_string, Rat};
use crate::partition::{factor_terms, Builder, ClassPartition, Multiset, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SystemError {
    #[error("unknown format {0:?} (expected text, json or latex)")]
    UnknownFormat(String),
    #[error("malformed system document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono {
    pub x: u32,
    pub u: u32,
    pub e: u32,
    pub a: Vec<u32>,
}

impl Mono {
    pub fn total_a(&self) -> u32 {
        self.a.iter().sum()
    }
}

/// Sparse polynomial in `x`, `u`, `E` and `a_0..a_{n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SysPoly {
    n: usize,
    terms: BTreeMap<Mono, Rat>,
}

fn factorial_rat(k: u32) -> Rat {
    (1..=k).fold(Rat::one(), |acc, i| acc * Rat::from_integer(i.into()))
}

impl SysPoly {
    pub fn zero(n: usize) -> Self {
        SysPoly { n, terms: BTreeMap::new() }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, m: Mono, c: Rat) {
        assert_eq!(m.a.len(), self.n);
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(Rat::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    /// `c · x · u^κ · Π a^l / l!` for a term.
    pub fn add_class_term(&mut self, classes: &[u32], kappa: u32, sign: i64) {
        let a = crate::partition::exponents(classes, self.n);
        let denom = a.iter().fold(Rat::one(), |acc, &l| acc * factorial_rat(l));
        self.add_term(Mono { x: 1, u: kappa, e: 0, a }, Rat::from_integer(sign.into()) / denom);
    }

    pub fn add(&self, o: &SysPoly) -> SysPoly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Rat)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `a`-degree of a monomial.
    pub fn max_a_degree(&self) -> u32 {
        self.terms.keys().map(Mono::total_a).max().unwrap_or(0)
    }

    /// Largest exponent of any single variable.
    pub fn max_exponent(&self) -> u32 {
        self.terms.keys().flat_map(|m| m.a.iter().copied().chain([m.x, m.u])).max().unwrap_or(0)
    }

    pub fn set_u1(&self) -> SysPoly {
        let mut r = SysPoly::zero(self.n);
        for (m, c) in &self.terms {
            r.add_term(Mono { u: 0, ..m.clone() }, c.clone());
        }
        r
    }

    pub fn diff_x(&self) -> SysPoly {
        let mut r = SysPoly::zero(self.n);
        for (m, c) in &self.terms {
            if m.x > 0 {
                r.add_term(Mono { x: m.x - 1, ..m.clone() }, c * Rat::from_integer(m.x.into()));
            }
        }
        r
    }

    pub fn diff_u(&self) -> SysPoly {
        let mut r = SysPoly::zero(self.n);
        for (m, c) in &self.terms {
            if m.u > 0 {
                r.add_term(Mono { u: m.u - 1, ..m.clone() }, c * Rat::from_integer(m.u.into()));
            }
        }
        r
    }

    /// `∂/∂a_j` with `∂E/∂a_j = E`.
    pub fn diff_a(&self, j: usize) -> SysPoly {
        let mut r = SysPoly::zero(self.n);
        for (m, c) in &self.terms {
            if m.a[j] > 0 {
                let mut a = m.a.clone();
                a[j] -= 1;
                r.add_term(Mono { a, ..m.clone() }, c * Rat::from_integer(m.a[j].into()));
            }
            if m.e > 0 {
                r.add_term(m.clone(), c.clone() * Rat::from_integer(m.e.into()));
            }
        }
        r
    }

    /// Evaluate at the given values; `e_val` is the value of `E`.
    pub fn eval<T: crate::algebra::Ring>(&self, x: &T, u: &T, e_val: &T, a: &[T]) -> T {
        assert_eq!(a.len(), self.n);
        let maxp = self.max_exponent().max(1) as usize;
        let table = |v: &T| {
            let mut p = vec![T::one()];
            for k in 1..=maxp {
                let next = p[k - 1].times(v);
                p.push(next);
            }
            p
        };
        let xp = table(x);
        let up = table(u);
        let ap: Vec<Vec<T>> = a.iter().map(table).collect();
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            let mut t = T::from_rat(c).times(&xp[m.x as usize]).times(&up[m.u as usize]);
            for _ in 0..m.e {
                t = t.times(e_val);
            }
            for (j, &l) in m.a.iter().enumerate() {
                if l > 0 {
                    t = t.times(&ap[j][l as usize]);
                }
            }
            acc = acc.plus(&t);
        }
        acc
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(m, c)| {
                    let a: BTreeMap<String, u32> = m.a.iter().enumerate().filter(|(_, &l)| l > 0).map(|(j, &l)| (j.to_string(), l)).collect();
                    json!({"coeff": rat_string(c), "x": m.x, "u": m.u, "E": m.e, "a": a})
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value, n: usize) -> Result<SysPoly, SystemError> {
        let bad = |s: &str| SystemError::Malformed(s.to_string());
        let mut p = SysPoly::zero(n);
        for t in v.as_array().ok_or_else(|| bad("polynomial must be an array"))? {
            let c = t["coeff"].as_str().and_then(parse_rat).ok_or_else(|| bad("bad coeff"))?;
            let int = |k: &str| t[k].as_u64().map(|v| v as u32).ok_or_else(|| bad(k));
            let mut a = vec![0; n];
            for (j, l) in t["a"].as_object().ok_or_else(|| bad("a"))? {
                let j: usize = j.parse().map_err(|_| bad("a index"))?;
                if j >= n {
                    return Err(bad("a index out of range"));
                }
                a[j] = l.as_u64().ok_or_else(|| bad("a exponent"))? as u32;
            }
            p.add_term(Mono { x: int("x")?, u: int("u")?, e: int("E")?, a }, c);
        }
        Ok(p)
    }

    /// Plain-text expanded form.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mut factors = Vec::new();
            if !mag.is_one() {
                factors.push(rat_string(&mag));
            }
            if m.x > 0 {
                factors.push(pow_text("x", m.x));
            }
            if m.e > 0 {
                factors.push(pow_text("E", m.e));
            }
            for (j, &l) in m.a.iter().enumerate() {
                if l > 0 {
                    factors.push(pow_text(&format!("a_{j}"), l));
                }
            }
            if m.u > 0 {
                factors.push(pow_text("u", m.u));
            }
            if factors.is_empty() {
                factors.push("1".into());
            }
            s.push_str(&factors.join(" "));
        }
        s
    }
}

fn pow_text(v: &str, k: u32) -> String {
    if k == 1 {
        v.to_string()
    } else {
        format!("{v}^{k}")
    }
}

/// The planted system plus the rooted equation.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSystem {
    pub builder: Builder,
    pub pattern: String,
    /// `F_0..F_L`.
    pub f: Vec<SysPoly>,
    /// `G` of the rooted equation.
    pub g: SysPoly,
    /// Λ terms per class with their `K` (for factored rendering).
    pub lambda: Vec<Vec<Term>>,
    pub complement: Vec<Term>,
    pub rooted: Vec<Term>,
}

/// `a_j = x Σ_{Λ_j} a^l u^K / l!` for `j ≥ 1`; the complement equation is
/// `x E` minus every other term at `u = 1`, plus the `u`-weighted complement
/// terms.
pub fn build_planted_system(part: &ClassPartition) -> EquationSystem {
    let n = part.num_classes();
    let mut f = vec![SysPoly::zero(n); n];
    f[0].add_term(Mono { x: 1, u: 0, e: 1, a: vec![0; n] }, Rat::one());
    for j in 1..n {
        for t in &part.lambda[j] {
            f[j].add_class_term(&t.classes, t.k, 1);
            f[0].add_class_term(&t.classes, 0, -1);
        }
    }
    for t in &part.complement {
        f[0].add_class_term(&t.classes, 0, -1);
        f[0].add_class_term(&t.classes, t.k, 1);
    }
    EquationSystem {
        builder: part.builder,
        pattern: part.pattern_name.clone(),
        f,
        g: build_rooted_equation(part),
        lambda: part.lambda.clone(),
        complement: part.complement.clone(),
        rooted: part.rooted.clone(),
    }
}

/// `G = x(E − Q(a, 1) + Q(a, u))`, keeping only terms with `K̄ > 0`.
pub fn build_rooted_equation(part: &ClassPartition) -> SysPoly {
    let n = part.num_classes();
    let mut g = SysPoly::zero(n);
    g.add_term(Mono { x: 1, u: 0, e: 1, a: vec![0; n] }, Rat::one());
    for t in &part.rooted {
        g.add_class_term(&t.classes, t.k, 1);
        g.add_class_term(&t.classes, 0, -1);
    }
    g
}

impl EquationSystem {
    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn substitute_u1(&self) -> EquationSystem {
        EquationSystem {
            f: self.f.iter().map(SysPoly::set_u1).collect(),
            g: self.g.set_u1(),
            lambda: self.lambda.iter().map(|ts| ts.iter().map(|t| Term { k: 0, ..t.clone() }).collect()).collect(),
            complement: Vec::new(),
            rooted: Vec::new(),
            ..self.clone()
        }
    }

    /// `∂F_i/∂a_j`.
    pub fn jacobian(&self) -> Vec<Vec<SysPoly>> {
        self.f.iter().map(|fi| (0..self.n()).map(|j| fi.diff_a(j)).collect()).collect()
    }

    /// `Σ_j F_j(x, a, 1) = x·E` as a polynomial identity.
    pub fn sums_to_p(&self) -> bool {
        let n = self.n();
        let total = self.f.iter().fold(SysPoly::zero(n), |acc, p| acc.add(p)).set_u1();
        let mut want = SysPoly::zero(n);
        want.add_term(Mono { x: 1, u: 0, e: 1, a: vec![0; n] }, Rat::one());
        total == want && self.g.set_u1() == want
    }

    /// Monomial-wise `Σ_{j≥1} P_j(y, 1) + complement terms ≤ exp(Σ y)`.
    pub fn dominance_holds(&self) -> bool {
        let n = self.n();
        let mut total = SysPoly::zero(n);
        for p in &self.f[1..] {
            total = total.add(&p.set_u1());
        }
        let mut comp = SysPoly::zero(n);
        for t in &self.complement {
            comp.add_class_term(&t.classes, 0, 1);
        }
        total = total.add(&comp);
        let ok = total.terms().all(|(m, c)| {
            let bound = m.a.iter().fold(Rat::one(), |acc, &l| acc / factorial_rat(l));
            m.x == 1 && m.e == 0 && !c.is_negative() && *c <= bound
        });
        ok
    }

    /// `κ = 0` whenever the root degree is outside `D` (`D̄` for `G`), and all
    /// non-complement coefficients are non-negative.
    pub fn kappa_and_sign_ok(&self, d: &std::collections::BTreeSet<usize>, dbar: &std::collections::BTreeSet<usize>) -> bool {
        let planted_ok = self.f[1..].iter().chain(std::iter::once(&self.f[0])).all(|p| {
            p.terms().all(|(m, _)| m.u == 0 || d.contains(&(m.total_a() as usize)))
        });
        let rooted_ok = self.g.terms().all(|(m, _)| m.u == 0 || dbar.contains(&(m.total_a() as usize)));
        let signs_ok = self.f[1..].iter().all(|p| p.terms().all(|(_, c)| !c.is_negative()));
        planted_ok && rooted_ok && signs_ok
    }

    pub fn to_json(&self) -> Value {
        json!({
            "builder": self.builder,
            "pattern": self.pattern,
            "classes": self.n(),
            "equations": self.f.iter().map(SysPoly::to_json).collect::<Vec<_>>(),
            "rooted": self.g.to_json(),
        })
    }

    /// Rebuild the polynomial part of a system from its JSON form.
    pub fn from_json(v: &Value) -> Result<EquationSystem, SystemError> {
        let bad = |s: &str| SystemError::Malformed(s.to_string());
        let n = v["classes"].as_u64().ok_or_else(|| bad("classes"))? as usize;
        let builder = match v["builder"].as_str() {
            Some("naive") => Builder::Naive,
            Some("compact") => Builder::Compact,
            _ => return Err(bad("builder")),
        };
        let eqs = v["equations"].as_array().ok_or_else(|| bad("equations"))?;
        if eqs.len() != n {
            return Err(bad("equation count"));
        }
        let f = eqs.iter().map(|e| SysPoly::from_json(e, n)).collect::<Result<Vec<_>, _>>()?;
        Ok(EquationSystem {
            builder,
            pattern: v["pattern"].as_str().unwrap_or_default().to_string(),
            f,
            g: SysPoly::from_json(&v["rooted"], n)?,
            lambda: Vec::new(),
            complement: Vec::new(),
            rooted: Vec::new(),
        })
    }

    pub fn emit(&self, format: &str) -> Result<String, SystemError> {
        match format {
            "json" => Ok(serde_json::to_string_pretty(&self.to_json()).expect("serializable")),
            "text" => Ok(self.render(&Style::TEXT)),
            "latex" => Ok(self.render(&Style::LATEX)),
            other => Err(SystemError::UnknownFormat(other.into())),
        }
    }

    fn render(&self, st: &Style) -> String {
        let n = self.n();
        let mut out = String::new();
        out.push_str(st.begin);
        let mut lines = Vec::new();
        // complement equation
        let mut rhs = format!("{}{}{}", st.x, st.mul, st.exp_sum(n));
        let others: Vec<String> = (1..n).map(|j| st.var(j)).collect();
        if !others.is_empty() {
            let _ = write!(rhs, " - ({})|_{{u=1}}", others.join(" + "));
        }
        for t in &self.complement {
            let _ = write!(rhs, " + {}", st.term(t, n, true));
        }
        lines.push((st.var(0), rhs));
        for j in 1..n {
            lines.push((st.var(j), st.class_sum(&self.lambda.get(j).cloned().unwrap_or_default(), n, &self.f[j])));
        }
        let mut g = format!("{}{}{}", st.x, st.mul, st.exp_sum(n));
        for t in &self.rooted {
            let _ = write!(g, " + {}", st.term(t, n, true));
        }
        lines.push(("r".into(), g));
        for (i, (lhs, rhs)) in lines.iter().enumerate() {
            let end = if i + 1 == lines.len() { "" } else { st.eol };
            let _ = writeln!(out, "{lhs} {} {rhs}{end}", st.eq);
        }
        out.push_str(st.end);
        out
    }
}

struct Style {
    begin: &'static str,
    end: &'static str,
    eq: &'static str,
    eol: &'static str,
    x: &'static str,
    mul: &'static str,
    latex: bool,
}

impl Style {
    const TEXT: Style = Style { begin: "", end: "", eq: "=", eol: "", x: "x", mul: " ", latex: false };
    const LATEX: Style = Style { begin: "\\begin{align*}\n", end: "\\end{align*}\n", eq: "&=", eol: " \\\\", x: "x", mul: " ", latex: true };

    fn var(&self, j: usize) -> String {
        if self.latex {
            format!("a_{{{j}}}")
        } else {
            format!("a_{j}")
        }
    }

    fn pow(&self, base: &str, k: u32) -> String {
        match (k, self.latex) {
            (1, _) => base.to_string(),
            (_, true) => format!("{base}^{{{k}}}"),
            (_, false) => format!("{base}^{k}"),
        }
    }

    fn exp_sum(&self, n: usize) -> String {
        if n == 1 {
            return if self.latex { "e^{a_{0}}".into() } else { "exp(a_0)".into() };
        }
        if self.latex {
            format!("e^{{a_{{0}}+\\cdots+a_{{{}}}}}", n - 1)
        } else {
            format!("exp(a_0+...+a_{})", n - 1)
        }
    }

    fn frac(&self, c: &Rat) -> String {
        if c.is_one() {
            return String::new();
        }
        if self.latex {
            format!("\\frac{{{}}}{{{}}} ", c.numer(), c.denom())
        } else {
            format!("{} ", rat_string(c))
        }
    }

    /// `x a^l (u^K - 1)/l!` or `x a^l u^K / l!`.
    fn term(&self, t: &Term, n: usize, minus_one: bool) -> String {
        let l = t.exponents(n);
        let c = l.iter().fold(Rat::one(), |acc, &k| acc / factorial_rat(k));
        let mut s = format!("{}{}", self.frac(&c), self.x);
        for (j, &k) in l.iter().enumerate() {
            if k > 0 {
                s.push_str(self.mul);
                s.push_str(&self.pow(&self.var(j), k));
            }
        }
        if minus_one {
            let _ = write!(s, "{}({} - 1)", self.mul, self.pow("u", t.k));
        } else if t.k > 0 {
            s.push_str(self.mul);
            s.push_str(&self.pow("u", t.k));
        }
        s
    }

    /// Factored form when `Λ_j` is a product of class sums and `K` is
    /// additive over children; otherwise the expanded polynomial.
    fn class_sum(&self, terms: &[Term], n: usize, fallback: &SysPoly) -> String {
        if let Some(s) = self.factored(terms) {
            return s;
        }
        if terms.is_empty() {
            return if self.latex { "0".into() } else { fallback.to_text() };
        }
        terms.iter().map(|t| self.term(t, n, false)).collect::<Vec<_>>().join(" + ")
    }

    fn factored(&self, terms: &[Term]) -> Option<String> {
        let set: std::collections::BTreeSet<Multiset> = terms.iter().map(|t| t.classes.clone()).collect();
        let groups = factor_terms(&set)?;
        let k_of: BTreeMap<&Multiset, u32> = terms.iter().map(|t| (&t.classes, t.k)).collect();
        let base: Multiset = set.iter().next()?.clone();
        let k0 = k_of[&base] as i64;
        // weight of class c: change of K when one group minimum becomes c
        let mut weight: BTreeMap<u32, i64> = BTreeMap::new();
        for (g, _) in &groups {
            let lo = g[0];
            for &c in g {
                let mut m = base.clone();
                let pos = m.iter().position(|&x| x == lo)?;
                m[pos] = c;
                m.sort_unstable();
                let w = *k_of.get(&m)? as i64 - k0;
                if w < 0 {
                    return None;
                }
                weight.insert(c, w);
            }
        }
        for t in terms {
            let s: i64 = t.classes.iter().map(|c| weight[c]).sum();
            if s + k0 != t.k as i64 {
                return None;
            }
        }
        let coeff = groups.iter().fold(Rat::one(), |acc, (_, e)| acc / factorial_rat(*e as u32));
        let mut s = format!("{}{}", self.frac(&coeff), self.x);
        for (g, e) in &groups {
            let mut by_w: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
            for &c in g {
                by_w.entry(weight[&c]).or_default().push(c);
            }
            let mut parts = Vec::new();
            for (w, cs) in &by_w {
                let sum = cs.iter().map(|&c| self.var(c as usize)).collect::<Vec<_>>().join("+");
                if *w == 0 {
                    parts.push(sum);
                } else {
                    let inner = if cs.len() > 1 { format!("({sum})") } else { sum };
                    parts.push(format!("{inner}{}{}", self.mul, self.pow("u", *w as u32)));
                }
            }
            let body = parts.join("+");
            let single = g.len() == 1;
            let factor = if single { body } else { format!("({body})") };
            s.push_str(self.mul);
            s.push_str(&self.pow(&factor, *e as u32));
        }
        if k0 > 0 {
            s.push_str(self.mul);
            s.push_str(&self.pow("u", k0 as u32));
        }
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{build_partition, DEFAULT_CLASS_LIMIT};
    use crate::pattern::Pattern;

    fn sys(name: &str, b: Builder) -> EquationSystem {
        let p = Pattern::named(name).unwrap();
        build_planted_system(&build_partition(&p, b, DEFAULT_CLASS_LIMIT).unwrap())
    }

    #[test]
    fn sums_and_dominance() {
        for name in ["star:2", "star:3", "paper:fig1"] {
            for b in [Builder::Naive, Builder::Compact] {
                let s = sys(name, b);
                assert!(s.sums_to_p(), "{name} {b}");
                assert!(s.dominance_holds(), "{name} {b}");
            }
        }
    }

    #[test]
    fn star_text() {
        let s = sys("star:3", Builder::Naive);
        let text = s.emit("text").unwrap();
        assert!(text.contains("a_1 = 1/2 x (a_0+a_1)^2 u"), "{text}");
    }

    #[test]
    fn json_round_trip() {
        let s = sys("paper:fig1", Builder::Naive);
        let back = EquationSystem::from_json(&s.to_json()).unwrap();
        assert_eq!(back.f, s.f);
        assert_eq!(back.g, s.g);
        assert!(matches!(s.emit("yaml"), Err(SystemError::UnknownFormat(_))));
    }

    #[test]
    fn diff_chain_rule() {
        let mut p = SysPoly::zero(2);
        p.add_term(Mono { x: 1, u: 0, e: 1, a: vec![1, 0] }, Rat::one());
        let d = p.diff_a(0);
        // ∂(x E a_0)/∂a_0 = x E + x E a_0
        assert_eq!(d.len(), 2);
        let v = d.eval(&Rat::one(), &Rat::one(), &Rat::from_integer(2.into()), &[Rat::from_integer(3.into()), Rat::zero()]);
        assert_eq!(v, Rat::from_integer(8.into()));
    }
}

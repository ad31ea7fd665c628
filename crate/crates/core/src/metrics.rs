//! Exact-rational evaluation of the comparative communication-load formulas
//! and big-integer verification of the supporting inequalities.
//!
//! Everything that feeds a verdict is computed in exact arithmetic; floats
//! appear only in rendered output columns.

use std::collections::BTreeMap;
use std::io;

use num::{BigInt, BigRational, BigUint, One, Signed, Zero};
use thiserror::Error;

use crate::binomial::{binomial, log10_binomial};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("parameter out of range: {0}")]
    ParameterRange(String),
    #[error("constraint {name} violated: {detail}")]
    ConstraintViolation { name: &'static str, detail: String },
    #[error("row {row} needs symbol {symbol}")]
    MissingSymbol { row: &'static str, symbol: &'static str },
    #[error("csv write failed: {0}")]
    Csv(String),
}

fn rat_u(n: BigUint, d: BigUint) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rat64(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

// ---------------------------------------------------------------------------
// Core load formulas
// ---------------------------------------------------------------------------

/// The optimal cascaded load for (K, r, s):
/// sum over l in [max(r+1, s), min(r+s, K)] of
/// C(K-r, K-l) * C(r, l-s) / C(K, s) * (l-r)/(l-1). Empty range gives 0.
pub fn li_optimal_load(k: u64, r: u64, s: u64) -> Result<BigRational, MetricsError> {
    if r < 1 || s < 1 || r > k || s > k {
        return Err(MetricsError::ParameterRange(format!(
            "need 1 <= r, s <= K, got K = {k}, r = {r}, s = {s}"
        )));
    }
    let denom = binomial(k, s);
    let mut total = BigRational::zero();
    for l in (r + 1).max(s)..=(r + s).min(k) {
        let count = binomial(k - r, k - l) * binomial(r, l - s);
        if count.is_zero() {
            continue;
        }
        total += rat_u(count, denom.clone()) * rat64(l - r, l - 1);
    }
    Ok(total)
}

/// The same quantity at K = p^w + y, r = s = p^w, written as the i-indexed
/// sum over [1, y]. Kept as an independent route for cross-checking.
pub fn li_load_reindexed(pw: u64, y: u64) -> BigRational {
    let denom = binomial(pw + y, pw);
    let mut total = BigRational::zero();
    for i in 1..=y {
        let count = binomial(y, i) * binomial(pw, i);
        if count.is_zero() {
            continue;
        }
        total += rat_u(count, denom.clone()) * rat64(i, pw + i - 1);
    }
    total
}

/// Achieved load of the cyclic-design scheme: (n - t) / n.
pub fn our_load(n: u64, t: u64) -> Result<BigRational, MetricsError> {
    if t >= n || t < 1 {
        return Err(MetricsError::ConstraintViolation {
            name: "n > t >= 1",
            detail: format!("n = {n}, t = {t}"),
        });
    }
    if 3 * t < 2 * n {
        return Err(MetricsError::ConstraintViolation {
            name: "3t >= 2n",
            detail: format!("3t = {} < 2n = {}", 3 * t, 2 * n),
        });
    }
    Ok(rat64(n - t, n))
}

/// Loads of the symmetric-design scheme and of ours at the same parameter
/// point n = b^2 + b + 1, t = b^2: (L_Jiang, L_Our).
pub fn jiang_sbibd_loads(b: u64) -> Result<(BigRational, BigRational), MetricsError> {
    if b < 2 {
        return Err(MetricsError::ParameterRange(format!(
            "need b >= 2, got {b}"
        )));
    }
    let n = b * b + b + 1;
    let t = b * b;
    // 3t >= 2n fails exactly at b = 2 in this family
    let ours = our_load(n, t)?;
    let jiang = rat64(b * b * (b + 1), n * (b * b - 1));
    Ok((jiang, ours))
}

// ---------------------------------------------------------------------------
// The p^w + y family and its inequalities
// ---------------------------------------------------------------------------

/// The parameter family K = p^w + y with y = sum of p^{v_i}:
/// distinct exponents bounded by floor(w/2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyParams {
    p: u64,
    w: u32,
    vs: Vec<u32>,
}

impl FamilyParams {
    pub fn new(p: u64, w: u32, vs: Vec<u32>) -> Result<Self, MetricsError> {
        if p < 2 {
            return Err(MetricsError::ParameterRange(format!("need p >= 2, got {p}")));
        }
        if w < 1 {
            return Err(MetricsError::ParameterRange("need w >= 1".into()));
        }
        if vs.is_empty() {
            return Err(MetricsError::ParameterRange(
                "need at least one exponent v_i".into(),
            ));
        }
        let mut seen = vs.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(MetricsError::ParameterRange(
                "exponents v_i must be pairwise distinct".into(),
            ));
        }
        let max_v = *seen.last().unwrap();
        if w / 2 < max_v {
            return Err(MetricsError::ConstraintViolation {
                name: "floor(w/2) >= max(v_i)",
                detail: format!("floor({w}/2) < {max_v}"),
            });
        }
        if p.checked_pow(w).is_none() {
            return Err(MetricsError::ParameterRange(format!(
                "p^w overflows: p = {p}, w = {w}"
            )));
        }
        Ok(FamilyParams { p, w, vs })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn pw(&self) -> u64 {
        self.p.pow(self.w)
    }

    pub fn y(&self) -> u64 {
        self.vs.iter().map(|&v| self.p.pow(v)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InequalityCheck {
    pub lhs: BigInt,
    pub rhs: BigInt,
    /// lhs > rhs, strictly.
    pub holds: bool,
}

impl InequalityCheck {
    fn strict(lhs: BigInt, rhs: BigInt) -> Self {
        let holds = lhs > rhs;
        InequalityCheck { lhs, rhs, holds }
    }
}

/// Exact evaluation of the asymptotic inequality and its two supporting
/// bounds at one parameter point. The verdicts carry no truth claim below
/// large p; the inequality is asymptotic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma31Report {
    pub p: u64,
    pub w: u32,
    pub y: u64,
    /// sum_{i=0}^{y} i * C(y, y-i) * C(p^w, i)  >  (y-2) * C(p^w + y, y)
    pub main: InequalityCheck,
    /// 2 * C(y,3) * C(p^w, y-3)  >  sum_{i=0}^{y-3} (y-2-i) * C(y, y-i) * C(p^w, i)
    pub bound_sum: InequalityCheck,
    /// C(p^w, y)  >  C(y,3) * C(p^w, y-3)
    pub bound_binom: InequalityCheck,
}

impl Lemma31Report {
    pub fn summary(&self) -> String {
        let verdict = |c: &InequalityCheck| if c.holds { "HOLDS" } else { "FAILS" };
        format!(
            "p={} w={} y={}: main {} > {} {}; sum-bound {} > {} {}; binom-bound {} > {} {}",
            self.p,
            self.w,
            self.y,
            self.main.lhs,
            self.main.rhs,
            verdict(&self.main),
            self.bound_sum.lhs,
            self.bound_sum.rhs,
            verdict(&self.bound_sum),
            self.bound_binom.lhs,
            self.bound_binom.rhs,
            verdict(&self.bound_binom),
        )
    }
}

pub fn lemma31_check(fp: &FamilyParams) -> Lemma31Report {
    let pw = fp.pw();
    let y = fp.y();
    let big = |u: BigUint| BigInt::from(u);

    let main_lhs: BigInt = (0..=y)
        .map(|i| BigInt::from(i) * big(binomial(y, y - i) * binomial(pw, i)))
        .sum();
    let main_rhs = (BigInt::from(y) - BigInt::from(2u32)) * big(binomial(pw + y, y));

    let sum_lhs = BigInt::from(2) * big(binomial(y, 3) * binomial(pw, y.saturating_sub(3)));
    let sum_rhs: BigInt = (0..=y.saturating_sub(3))
        .map(|i| {
            (BigInt::from(y) - BigInt::from(2u32) - BigInt::from(i))
                * big(binomial(y, y - i) * binomial(pw, i))
        })
        .sum();

    let binom_lhs = big(binomial(pw, y));
    let binom_rhs = big(binomial(y, 3) * binomial(pw, y.saturating_sub(3)));

    Lemma31Report {
        p: fp.p(),
        w: fp.w(),
        y,
        main: InequalityCheck::strict(main_lhs, main_rhs),
        bound_sum: InequalityCheck::strict(sum_lhs, sum_rhs),
        bound_binom: InequalityCheck::strict(binom_lhs, binom_rhs),
    }
}

/// L_Li / L_1 at K = p^w + y, r = s = p^w, where L_1 = y / (p^w + y) is the
/// achieved load. Requires the admissibility inequality 3p^w > 2(p^w + y).
pub fn asymptotic_ratio(fp: &FamilyParams) -> Result<BigRational, MetricsError> {
    let pw = fp.pw();
    let y = fp.y();
    if 3 * pw <= 2 * (pw + y) {
        return Err(MetricsError::ConstraintViolation {
            name: "3p^w > 2(p^w + y)",
            detail: format!("3*{pw} <= 2*({pw} + {y})"),
        });
    }
    let li = li_optimal_load(pw + y, pw, pw)?;
    let ours = rat64(y, pw + y);
    Ok(li / ours)
}

// ---------------------------------------------------------------------------
// Decimal rendering
// ---------------------------------------------------------------------------

/// Rounds a nonnegative rational to `sig` significant digits, rendered as a
/// plain decimal (no exponent); exact big-integer arithmetic throughout.
pub fn to_sig_digits(r: &BigRational, sig: u32) -> String {
    assert!(sig >= 1);
    if r.is_zero() {
        return "0".to_string();
    }
    assert!(!r.is_negative(), "loads and ratios are nonnegative");
    let num = r.numer().magnitude().clone();
    let den = r.denom().magnitude().clone();
    // exponent e with 10^e <= r < 10^(e+1)
    let mut e: i64 = 0;
    let ten = BigUint::from(10u32);
    if num >= den {
        let mut scaled = den.clone();
        while &scaled * &ten <= num {
            scaled *= &ten;
            e += 1;
        }
    } else {
        let mut scaled = num.clone();
        loop {
            scaled *= &ten;
            e -= 1;
            if scaled >= den {
                break;
            }
        }
    }
    loop {
        // digits = round(r * 10^(sig-1-e))
        let shift = sig as i64 - 1 - e;
        let (n_scaled, d_scaled) = if shift >= 0 {
            (num.clone() * ten.pow(shift as u32), den.clone())
        } else {
            (num.clone(), den.clone() * ten.pow((-shift) as u32))
        };
        let mut q = &n_scaled / &d_scaled;
        let rem = &n_scaled % &d_scaled;
        if &rem * 2u32 >= d_scaled {
            q += 1u32;
        }
        let digits = q.to_string();
        if digits.len() as u32 > sig {
            // rounding carried into a new leading digit, e.g. 0.999.. -> 1.00
            e += 1;
            continue;
        }
        return if e >= 0 {
            let point = (e + 1) as usize;
            if point >= digits.len() {
                format!("{}{}", digits, "0".repeat(point - digits.len()))
            } else {
                format!("{}.{}", &digits[..point], &digits[point..])
            }
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), digits)
        };
    }
}

// ---------------------------------------------------------------------------
// Comparison table rows
// ---------------------------------------------------------------------------

/// Rows of the scheme-comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table1Row {
    Li,
    Woolsey,
    JiangPda,
    JiangSdRr,
    JiangSdRkr,
    ChengTdesign,
    ChengGdd,
    ChengSd,
    ChengAd,
    ChengAd0,
    New,
}

impl Table1Row {
    pub fn name(&self) -> &'static str {
        match self {
            Table1Row::Li => "li",
            Table1Row::Woolsey => "woolsey",
            Table1Row::JiangPda => "jiang_pda",
            Table1Row::JiangSdRr => "jiang_sd_rr",
            Table1Row::JiangSdRkr => "jiang_sd_rKr",
            Table1Row::ChengTdesign => "cheng_tdesign",
            Table1Row::ChengGdd => "cheng_gdd",
            Table1Row::ChengSd => "cheng_sd",
            Table1Row::ChengAd => "cheng_ad",
            Table1Row::ChengAd0 => "cheng_ad0",
            Table1Row::New => "new",
        }
    }
}

/// One evaluated comparison row. Parameters that the supplied symbols do not
/// determine stay empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadReport {
    pub scheme: String,
    pub k: Option<BigUint>,
    pub r: Option<BigUint>,
    pub s: Option<BigUint>,
    pub n_files: Option<BigUint>,
    pub q_functions: Option<BigUint>,
    pub load: BigRational,
    pub load_float: String,
    pub note: Option<String>,
}

fn need(
    params: &BTreeMap<String, u64>,
    row: &'static str,
    symbol: &'static str,
) -> Result<u64, MetricsError> {
    params
        .get(symbol)
        .copied()
        .ok_or(MetricsError::MissingSymbol { row, symbol })
}

/// Evaluates one table row's closed-form load from its named symbols.
pub fn table1_loads(
    row: Table1Row,
    params: &BTreeMap<String, u64>,
) -> Result<LoadReport, MetricsError> {
    let name = row.name();
    let some = |v: u64| Some(BigUint::from(v));
    let mut note = None;
    let (k, r, s, n_files, q_functions, load) = match row {
        Table1Row::Li => {
            let (k, r, s) = (need(params, name, "K")?, need(params, name, "r")?, need(params, name, "s")?);
            let load = li_optimal_load(k, r, s)?;
            (some(k), some(r), some(s), Some(binomial(k, r)), Some(binomial(k, s)), load)
        }
        Table1Row::Woolsey => {
            let (k, r) = (need(params, name, "K")?, need(params, name, "r")?);
            if r < 2 || r > k {
                return Err(MetricsError::ParameterRange(
                    "woolsey row needs 2 <= r <= K".into(),
                ));
            }
            // Transcribed as printed in the source table, which contains
            // apparent typos ("k - r" and a binomial in K/2); read k = K and
            // take C(K/2, 2) as the generalized binomial z(z-1)/2.
            note = Some(
                "formula transcribed as printed (known typos); excluded from invariants".to_string(),
            );
            if r > 60 {
                return Err(MetricsError::ParameterRange(
                    "woolsey row capped at r <= 60".into(),
                ));
            }
            let kr = rat64(r, k);
            let first = rat64(r, 1).pow(r as i32) * rat64(k - r, 1)
                / (rat64(k, 1).pow(r as i32) * rat64(r - 1, 1));
            let half = rat64(k, 2);
            let c_half_2 = (half.clone() * (half - BigRational::one())) / rat64(2, 1);
            let mut sum = BigRational::zero();
            for l in 2..=r {
                sum += kr.pow((r + l) as i32)
                    * rat_u(binomial(r, l), BigUint::one())
                    * c_half_2.pow(l as i32)
                    * rat_u(BigUint::one() << (l as usize), BigUint::one())
                    * rat64(l, 2 * l - 1);
            }
            let load = first + sum;
            let files = rat64(k, r).pow(r as i32 - 1);
            let files_int = files.is_integer().then(|| files.to_integer().magnitude().clone());
            (some(k), some(r), some(r), files_int.clone(), files_int, load)
        }
        Table1Row::JiangPda => {
            let (k, r, s) = (need(params, name, "K")?, need(params, name, "r")?, need(params, name, "s")?);
            if r < 2 || r > k || s > k || s < 1 {
                return Err(MetricsError::ParameterRange(
                    "jiang_pda row needs 2 <= r <= K and 1 <= s <= K".into(),
                ));
            }
            let load = rat64(s, r - 1) * (BigRational::one() - rat64(r, k));
            let files = rat64(k, r).pow(r as i32 - 1);
            let files_int = files.is_integer().then(|| files.to_integer().magnitude().clone());
            let q = k / num::integer::gcd(k, s);
            (some(k), some(r), some(s), files_int, some(q), load)
        }
        Table1Row::JiangSdRr => {
            let (k, r) = (need(params, name, "K")?, need(params, name, "r")?);
            if r < 2 || r >= k {
                return Err(MetricsError::ParameterRange("jiang_sd_rr needs 2 <= r < K".into()));
            }
            let load = rat64(r * (k - r), (r - 1) * k);
            (some(k), some(r), some(r), some(k), some(k), load)
        }
        Table1Row::JiangSdRkr => {
            let (k, r) = (need(params, name, "K")?, need(params, name, "r")?);
            if r >= k || k < 2 {
                return Err(MetricsError::ParameterRange("jiang_sd_rKr needs r < K, K >= 2".into()));
            }
            let load = rat64(k - r, k - 1);
            (some(k), some(r), some(k - r), some(k), some(k), load)
        }
        Table1Row::ChengTdesign => {
            let n = need(params, name, "N")?;
            if n < 1 {
                return Err(MetricsError::ParameterRange("cheng_tdesign needs N >= 1".into()));
            }
            let load = rat64(n - 1, 2 * n);
            (None, None, None, some(n), some(n), load)
        }
        Table1Row::ChengGdd => {
            let (m, q) = (need(params, name, "m")?, need(params, name, "q")?);
            if q < 2 || m < 1 {
                return Err(MetricsError::ParameterRange(
                    "cheng_gdd needs q >= 2 and m >= 1".into(),
                ));
            }
            let load = rat64(1, 2) + rat64(q - 2, m * q);
            (None, None, None, some(m * q), some(m * q), load)
        }
        Table1Row::ChengSd => {
            let (k, r) = (need(params, name, "K")?, need(params, name, "r")?);
            if k < 2 || r < 1 || r >= k {
                return Err(MetricsError::ParameterRange(
                    "cheng_sd needs K >= 2 and 1 <= r < K".into(),
                ));
            }
            let load = rat64((k - 1) * (k - 1) + k - r * k, k * (k - 1));
            (some(k), some(r), some(k - r), some(k), some(k), load)
        }
        Table1Row::ChengAd => {
            let (n, k_sz) = (need(params, name, "n")?, need(params, name, "k")?);
            if n < 1 {
                return Err(MetricsError::ParameterRange("cheng_ad needs n >= 1".into()));
            }
            let load = rat64(n - 1, 2 * n);
            (some(n), some(k_sz), some(k_sz), some(n), some(n), load)
        }
        Table1Row::ChengAd0 => {
            let (n, k_sz) = (need(params, name, "n")?, need(params, name, "k")?);
            if n < 1 || k_sz < 1 || k_sz * (k_sz - 1) > 2 * n - 2 {
                return Err(MetricsError::ParameterRange(
                    "cheng_ad0 needs k(k-1) <= 2n - 2".into(),
                ));
            }
            let load = rat64(2 * n - 2 - k_sz * (k_sz - 1), 2 * n);
            (some(n), some(k_sz), some(k_sz), some(n), some(n), load)
        }
        Table1Row::New => {
            let (k, r) = (need(params, name, "K")?, need(params, name, "r")?);
            let load = our_load(k, r)?;
            (some(k), some(r), some(r), some(k), some(k), load)
        }
    };
    // the woolsey row is transcribed as printed and exempt from invariants
    let range_checked = !matches!(row, Table1Row::Woolsey);
    if range_checked && (load.is_negative() || load > BigRational::one()) {
        return Err(MetricsError::ParameterRange(format!(
            "row {name} load {load} falls outside [0, 1]; symbols are inadmissible"
        )));
    }
    Ok(LoadReport {
        scheme: name.to_string(),
        k,
        r,
        s,
        n_files,
        q_functions,
        load_float: to_sig_digits(&load, 12),
        load,
        note,
    })
}

// ---------------------------------------------------------------------------
// Sweep rows
// ---------------------------------------------------------------------------

/// One comparison point of the symmetric-design sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fig2Row {
    pub b: u64,
    pub l_jiang: BigRational,
    pub l_our: BigRational,
}

pub fn fig2_row(b: u64) -> Result<Fig2Row, MetricsError> {
    if b < 3 {
        return Err(MetricsError::ParameterRange(format!(
            "sweep needs b >= 3, got {b}"
        )));
    }
    let (l_jiang, l_our) = jiang_sbibd_loads(b)?;
    if l_our >= l_jiang {
        return Err(MetricsError::ConstraintViolation {
            name: "L_Our < L_Jiang",
            detail: format!("violated at b = {b}"),
        });
    }
    Ok(Fig2Row { b, l_jiang, l_our })
}

pub fn fig2_rows(b_min: u64, b_max: u64) -> Result<Vec<Fig2Row>, MetricsError> {
    (b_min..=b_max).map(fig2_row).collect()
}

/// One comparison point of the K = p^4 + p^2 + p + 1 sweep. The exact file
/// count C(K, r) is materialized only through p = 7; beyond that the log10
/// column carries the (approximate) magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub p: u64,
    pub k: u64,
    pub l_our: BigRational,
    pub l_li: BigRational,
    pub ratio: BigRational,
    pub log10_n_our: f64,
    pub log10_n_li: f64,
    pub n_li: Option<BigUint>,
}

/// Exact C(K, r) column cutoff.
pub const FIG3_EXACT_BINOMIAL_MAX_P: u64 = 7;

pub fn fig3_row(p: u64) -> Result<Fig3Row, MetricsError> {
    if p < 2 {
        return Err(MetricsError::ParameterRange(format!(
            "sweep needs p >= 2, got {p}"
        )));
    }
    let k = p.pow(4) + p.pow(2) + p + 1;
    let r = p.pow(4);
    let l_our = our_load(k, r)?;
    let l_li = li_optimal_load(k, r, r)?;
    let ratio = l_li.clone() / l_our.clone();
    let n_li = (p <= FIG3_EXACT_BINOMIAL_MAX_P).then(|| binomial(k, r));
    Ok(Fig3Row {
        p,
        k,
        l_our,
        l_li,
        ratio,
        log10_n_our: (k as f64).log10(),
        log10_n_li: log10_binomial(k, r),
        n_li,
    })
}

pub fn fig3_rows(p_min: u64, p_max: u64) -> Result<Vec<Fig3Row>, MetricsError> {
    (p_min..=p_max).map(fig3_row).collect()
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

fn csv_err(e: csv::Error) -> MetricsError {
    MetricsError::Csv(e.to_string())
}

fn opt_str(v: &Option<BigUint>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// scheme,K,r,s,N,Q,load_num,load_den,load_float
pub fn write_load_reports_csv<W: io::Write>(
    out: W,
    reports: &[LoadReport],
) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "K", "r", "s", "N", "Q", "load_num", "load_den", "load_float"])
        .map_err(csv_err)?;
    for rep in reports {
        w.write_record([
            rep.scheme.clone(),
            opt_str(&rep.k),
            opt_str(&rep.r),
            opt_str(&rep.s),
            opt_str(&rep.n_files),
            opt_str(&rep.q_functions),
            rep.load.numer().to_string(),
            rep.load.denom().to_string(),
            rep.load_float.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| MetricsError::Csv(e.to_string()))
}

/// b,l_jiang_num,l_jiang_den,l_jiang_float,l_our_num,l_our_den,l_our_float
pub fn write_fig2_csv<W: io::Write>(out: W, rows: &[Fig2Row]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "b",
        "l_jiang_num",
        "l_jiang_den",
        "l_jiang_float",
        "l_our_num",
        "l_our_den",
        "l_our_float",
    ])
    .map_err(csv_err)?;
    for row in rows {
        w.write_record([
            row.b.to_string(),
            row.l_jiang.numer().to_string(),
            row.l_jiang.denom().to_string(),
            to_sig_digits(&row.l_jiang, 12),
            row.l_our.numer().to_string(),
            row.l_our.denom().to_string(),
            to_sig_digits(&row.l_our, 12),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| MetricsError::Csv(e.to_string()))
}

/// p,K,l_our_*,l_li_*,ratio_*,log10_n_our,log10_n_li,n_li,n_li_mode
pub fn write_fig3_csv<W: io::Write>(out: W, rows: &[Fig3Row]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "p",
        "K",
        "l_our_num",
        "l_our_den",
        "l_our_float",
        "l_li_num",
        "l_li_den",
        "l_li_float",
        "ratio_num",
        "ratio_den",
        "ratio_float",
        "log10_n_our",
        "log10_n_li",
        "n_li",
        "n_li_mode",
    ])
    .map_err(csv_err)?;
    for row in rows {
        w.write_record([
            row.p.to_string(),
            row.k.to_string(),
            row.l_our.numer().to_string(),
            row.l_our.denom().to_string(),
            to_sig_digits(&row.l_our, 12),
            row.l_li.numer().to_string(),
            row.l_li.denom().to_string(),
            to_sig_digits(&row.l_li, 12),
            row.ratio.numer().to_string(),
            row.ratio.denom().to_string(),
            to_sig_digits(&row.ratio, 12),
            format!("{:.6}", row.log10_n_our),
            format!("{:.6}", row.log10_n_li),
            row.n_li.as_ref().map(|v| v.to_string()).unwrap_or_default(),
            if row.n_li.is_some() { "exact" } else { "approx" }.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| MetricsError::Csv(e.to_string()))
}

/// p,w,y plus lhs/rhs/verdict of the three inequality checks.
pub fn write_lemma31_csv<W: io::Write>(
    out: W,
    reports: &[Lemma31Report],
) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "p",
        "w",
        "y",
        "main_lhs",
        "main_rhs",
        "main_holds",
        "sum_bound_lhs",
        "sum_bound_rhs",
        "sum_bound_holds",
        "binom_bound_lhs",
        "binom_bound_rhs",
        "binom_bound_holds",
    ])
    .map_err(csv_err)?;
    for rep in reports {
        w.write_record([
            rep.p.to_string(),
            rep.w.to_string(),
            rep.y.to_string(),
            rep.main.lhs.to_string(),
            rep.main.rhs.to_string(),
            rep.main.holds.to_string(),
            rep.bound_sum.lhs.to_string(),
            rep.bound_sum.rhs.to_string(),
            rep.bound_sum.holds.to_string(),
            rep.bound_binom.lhs.to_string(),
            rep.bound_binom.rhs.to_string(),
            rep.bound_binom.holds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| MetricsError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn li_load_worked_values() {
        // two-term sum, l in {5, 6}: 2/15 + 4/25
        assert_eq!(li_optimal_load(6, 4, 4).unwrap(), rat64(22, 75));
        // full replication: empty summation range
        assert_eq!(li_optimal_load(9, 9, 4).unwrap(), BigRational::zero());
        assert_eq!(li_optimal_load(13, 9, 9).unwrap(), rat64(9946, 39325));
        assert!(li_optimal_load(5, 0, 2).is_err());
        assert!(li_optimal_load(5, 6, 2).is_err());
    }

    #[test]
    fn li_load_matches_reindexed_route() {
        for (pw, y) in [(9u64, 4u64), (25, 6), (49, 8), (16, 7), (121, 12)] {
            assert_eq!(
                li_optimal_load(pw + y, pw, pw).unwrap(),
                li_load_reindexed(pw, y),
                "pw={pw} y={y}"
            );
        }
    }

    #[test]
    fn our_load_examples() {
        assert_eq!(our_load(6, 4).unwrap(), rat64(1, 3));
        assert_eq!(our_load(13, 9).unwrap(), rat64(4, 13));
        assert_eq!(our_load(3, 2).unwrap(), rat64(1, 3));
        let err = our_load(5, 3).unwrap_err();
        assert!(err.to_string().contains("3t >= 2n"));
    }

    #[test]
    fn jiang_comparison_points() {
        let (jiang, ours) = jiang_sbibd_loads(3).unwrap();
        assert_eq!(jiang, rat64(9, 26));
        assert_eq!(ours, rat64(4, 13));
        assert!(ours < jiang);
        let (_, ours4) = jiang_sbibd_loads(4).unwrap();
        assert_eq!(ours4, rat64(5, 21));
        let err = jiang_sbibd_loads(2).unwrap_err();
        assert!(err.to_string().contains("3t >= 2n"), "{err}");
        assert!(jiang_sbibd_loads(1).is_err());
    }

    #[test]
    fn ordering_holds_through_b_19() {
        for b in 3..=19 {
            let (jiang, ours) = jiang_sbibd_loads(b).unwrap();
            assert!(ours < jiang, "b={b}");
        }
    }

    #[test]
    fn achieved_load_never_beats_the_optimum() {
        for n in 3..=40u64 {
            for t in (2 * n).div_ceil(3)..n {
                let ours = our_load(n, t).unwrap();
                let li = li_optimal_load(n, t, t).unwrap();
                assert!(ours >= li, "n={n} t={t}: {ours} < {li}");
            }
        }
    }

    #[test]
    fn family_params_validation() {
        assert!(FamilyParams::new(3, 2, vec![1, 0]).is_ok());
        assert!(FamilyParams::new(1, 2, vec![0]).is_err());
        assert!(FamilyParams::new(3, 2, vec![1, 1]).is_err());
        // floor(3/2) = 1 < 2
        assert!(FamilyParams::new(3, 3, vec![2]).is_err());
        let fp = FamilyParams::new(3, 2, vec![1, 0]).unwrap();
        assert_eq!(fp.pw(), 9);
        assert_eq!(fp.y(), 4);
    }

    #[test]
    fn lemma31_worked_point() {
        let fp = FamilyParams::new(3, 2, vec![1, 0]).unwrap();
        let rep = lemma31_check(&fp);
        assert_eq!(rep.main.lhs, BigInt::from(1980));
        assert_eq!(rep.main.rhs, BigInt::from(1430));
        assert!(rep.main.holds);
        assert_eq!(rep.bound_sum.lhs, BigInt::from(72));
        assert_eq!(rep.bound_sum.rhs, BigInt::from(38));
        assert!(rep.bound_sum.holds);
        assert_eq!(rep.bound_binom.lhs, BigInt::from(126));
        assert_eq!(rep.bound_binom.rhs, BigInt::from(36));
        assert!(rep.bound_binom.holds);
        assert!(rep.summary().contains("1980 > 1430 HOLDS"));
    }

    #[test]
    fn lemma31_reports_without_asserting_small_p() {
        // y = 3 at p = 2: evaluated, not asserted
        let fp = FamilyParams::new(2, 2, vec![1, 0]).unwrap();
        let rep = lemma31_check(&fp);
        assert_eq!(rep.y, 3);
        assert!(rep.main.lhs > BigInt::from(0));
    }

    #[test]
    fn lemma31_y2_edge() {
        // y = 2: the (y-2) factor vanishes, main holds whenever LHS > 0
        let fp = FamilyParams::new(2, 2, vec![1]).unwrap();
        let rep = lemma31_check(&fp);
        assert_eq!(rep.y, 2);
        assert_eq!(rep.main.rhs, BigInt::from(0));
        assert!(rep.main.holds);
    }

    #[test]
    fn asymptotic_ratio_worked_point() {
        let fp = FamilyParams::new(3, 2, vec![1, 0]).unwrap();
        let ratio = asymptotic_ratio(&fp).unwrap();
        // spec value 64649/78650 reduces to 4973/6050
        assert_eq!(ratio, rat64(64649, 78650));
        assert_eq!(ratio, rat64(4973, 6050));
    }

    #[test]
    fn asymptotic_ratio_trend() {
        let mut prev = BigRational::zero();
        for p in [3u64, 5, 7, 11, 13] {
            let fp = FamilyParams::new(p, 2, vec![1, 0]).unwrap();
            let ratio = asymptotic_ratio(&fp).unwrap();
            assert!(ratio > prev, "p={p}");
            assert!(ratio > BigRational::zero() && ratio <= BigRational::one());
            prev = ratio;
        }
        // p = 2 fails 3p^w > 2(p^w + y) at w = 2, y = p + 1
        let fp2 = FamilyParams::new(2, 2, vec![1, 0]).unwrap();
        assert!(asymptotic_ratio(&fp2).is_err());
    }

    #[test]
    fn sandwich_bounds_at_large_p() {
        // (y-2)/(p^w+y-1) < L_Li < y/(p^w+y-1), checked at sample points p >= 7
        for p in [7u64, 11, 13] {
            let fp = FamilyParams::new(p, 2, vec![1, 0]).unwrap();
            let (pw, y) = (fp.pw(), fp.y());
            let li = li_optimal_load(pw + y, pw, pw).unwrap();
            assert!(rat64(y - 2, pw + y - 1) < li, "p={p}");
            assert!(li < rat64(y, pw + y - 1), "p={p}");
        }
    }

    #[test]
    fn sig_digit_rendering() {
        assert_eq!(to_sig_digits(&rat64(1, 3), 12), "0.333333333333");
        assert_eq!(to_sig_digits(&rat64(22, 75), 12), "0.293333333333");
        assert_eq!(to_sig_digits(&BigRational::zero(), 12), "0");
        assert_eq!(to_sig_digits(&BigRational::one(), 3), "1.00");
        assert_eq!(to_sig_digits(&rat64(2, 3), 4), "0.6667");
        assert_eq!(to_sig_digits(&rat64(999999, 1000000), 3), "1.00");
        assert_eq!(to_sig_digits(&rat64(1, 1000), 3), "0.00100");
    }

    #[test]
    fn table1_worked_rows() {
        let mut params = BTreeMap::new();
        params.insert("K".to_string(), 6);
        params.insert("r".to_string(), 4);
        let new_row = table1_loads(Table1Row::New, &params).unwrap();
        assert_eq!(new_row.load, rat64(1, 3));
        assert_eq!(new_row.n_files, Some(BigUint::from(6u32)));

        let mut td = BTreeMap::new();
        td.insert("N".to_string(), 13);
        let cheng = table1_loads(Table1Row::ChengTdesign, &td).unwrap();
        assert_eq!(cheng.load, rat64(6, 13));

        params.insert("s".to_string(), 4);
        let pda = table1_loads(Table1Row::JiangPda, &params).unwrap();
        assert_eq!(pda.load, rat64(4, 9));

        let li = table1_loads(Table1Row::Li, &params).unwrap();
        assert_eq!(li.load, rat64(22, 75));
        assert_eq!(li.n_files, Some(BigUint::from(15u32)));

        let missing = table1_loads(Table1Row::ChengGdd, &params).unwrap_err();
        assert!(matches!(missing, MetricsError::MissingSymbol { symbol: "m", .. }));

        let woolsey = table1_loads(Table1Row::Woolsey, &params).unwrap();
        assert!(woolsey.note.is_some());
    }

    #[test]
    fn table1_loads_stay_in_unit_interval() {
        let rows: Vec<(Table1Row, Vec<(&str, u64)>)> = vec![
            (Table1Row::Li, vec![("K", 10), ("r", 4), ("s", 3)]),
            (Table1Row::JiangPda, vec![("K", 12), ("r", 4), ("s", 3)]),
            (Table1Row::JiangSdRr, vec![("K", 13), ("r", 9)]),
            (Table1Row::JiangSdRkr, vec![("K", 13), ("r", 9)]),
            (Table1Row::ChengTdesign, vec![("N", 21)]),
            (Table1Row::ChengGdd, vec![("m", 4), ("q", 3)]),
            (Table1Row::ChengSd, vec![("K", 13), ("r", 9)]),
            (Table1Row::ChengAd, vec![("n", 15), ("k", 7)]),
            (Table1Row::ChengAd0, vec![("n", 15), ("k", 5)]),
            (Table1Row::New, vec![("K", 13), ("r", 9)]),
        ];
        for (row, symbols) in rows {
            let params: BTreeMap<String, u64> =
                symbols.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            let report = table1_loads(row, &params).unwrap();
            assert!(!report.load.is_negative(), "{}", report.scheme);
            assert!(report.load <= BigRational::one(), "{}", report.scheme);
        }
    }

    #[test]
    fn table1_rejects_inadmissible_symbols() {
        let mut params = BTreeMap::new();
        params.insert("n".to_string(), 5);
        params.insert("k".to_string(), 5); // k(k-1) = 20 > 2n-2 = 8
        assert!(table1_loads(Table1Row::ChengAd0, &params).is_err());
        let mut params = BTreeMap::new();
        params.insert("K".to_string(), 6);
        params.insert("r".to_string(), 9);
        assert!(table1_loads(Table1Row::ChengSd, &params).is_err());
        assert!(table1_loads(Table1Row::JiangSdRr, &params).is_err());
    }

    #[test]
    fn fig2_rows_values() {
        let rows = fig2_rows(3, 9).unwrap();
        assert_eq!(rows.len(), 7);
        assert_eq!(rows[0].l_jiang, rat64(9, 26));
        assert_eq!(rows[0].l_our, rat64(4, 13));
        assert!(fig2_row(2).is_err());
    }

    #[test]
    fn fig3_row_values() {
        let row = fig3_row(2).unwrap();
        assert_eq!(row.k, 23);
        assert_eq!(row.l_our, rat64(7, 23));
        assert_eq!(row.n_li, Some(BigUint::from(245157u32)));
        assert!((row.log10_n_li - 245157f64.log10()).abs() < 1e-9);
        // exact column drops out past the guard
        let big = fig3_row(11).unwrap();
        assert!(big.n_li.is_none());
        assert!(big.log10_n_li > 100.0);
        assert!(fig3_row(1).is_err());
    }

    #[test]
    fn fig3_ratio_increasing_in_p() {
        let rows = fig3_rows(2, 5).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[0].ratio < pair[1].ratio);
        }
        for row in &rows {
            assert!(row.ratio > BigRational::zero() && row.ratio <= BigRational::one());
        }
    }

    #[test]
    fn csv_outputs_are_headered_and_deterministic() {
        let rows = fig2_rows(3, 5).unwrap();
        let mut a = Vec::new();
        write_fig2_csv(&mut a, &rows).unwrap();
        let mut b = Vec::new();
        write_fig2_csv(&mut b, &rows).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "b,l_jiang_num,l_jiang_den,l_jiang_float,l_our_num,l_our_den,l_our_float"
        );
        assert_eq!(lines.next().unwrap(), "3,9,26,0.346153846154,4,13,0.307692307692");

        let f3 = fig3_rows(2, 3).unwrap();
        let mut buf = Vec::new();
        write_fig3_csv(&mut buf, &f3).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("245157,exact"));

        let reports = vec![lemma31_check(&FamilyParams::new(3, 2, vec![1, 0]).unwrap())];
        let mut buf = Vec::new();
        write_lemma31_csv(&mut buf, &reports).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("1980,1430,true"));
    }
}

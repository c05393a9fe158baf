//! Border minimization of the privacy amplification objective
//!
//! ```text
//! f(x, y) = (A + C y) * [1 - H((B + C x y) / (A + C y))]
//! ```
//!
//! over `0 <= x, y <= 1` subject to `(B + C x y)/(A + C y) < 1/2`,
//! `B + C x y <= D` and `A + C y >= E`. Here `y` is the aggregate
//! multiphoton state's yield, `x` its error rate, `A` the measured yield
//! bound, `B` the measured error-mass part, `C` the aggregate weight, `D`
//! the error-mass cap extracted from the QBER equations and `E` an optional
//! yield floor.
//!
//! For fixed `y` the objective decreases in `x`, and the reduced profile
//! `g(y) = (A + y)[1 - H((B + y)/(A + y))]` has derivative
//! `1 + log2((B + y)/(A + y))`, negative while the ratio stays below 1/2;
//! the minimum therefore sits on the border, in one of three closed-form
//! spots depending on how the cap slack `D - B` compares with `C` and with
//! the floor slack `E - A`.
//!
//! [`grid_oracle_min`] is the dumb cross-check: exhaustive evaluation over
//! the feasible grid.

use crate::entropy::binary_entropy;
use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Minimum grid resolution accepted by the oracle.
pub const MIN_GRID_RESOLUTION: usize = 101;

/// Safety factor applied to the oracle's adjacent-difference slope when
/// reporting a Lipschitz estimate, covering diagonal displacement to an
/// off-grid border minimizer.
const LIPSCHITZ_SAFETY: f64 = 2.0;

/// Constants of one border-minimization instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinProblem<T> {
    /// `A`: measured yield bound, positive.
    pub yield_base: T,
    /// `B`: measured error-mass part, nonnegative.
    pub error_mass_base: T,
    /// `C`: weight of the aggregate correction, positive.
    pub span: T,
    /// `D`: upper bound on `B + C x y`.
    pub error_mass_cap: T,
    /// `E`: lower bound on `A + C y`.
    pub yield_floor: T,
}

impl<T: Real> MinProblem<T> {
    pub fn new(
        yield_base: T,
        error_mass_base: T,
        span: T,
        error_mass_cap: T,
        yield_floor: T,
    ) -> Result<Self> {
        let p = Self {
            yield_base,
            error_mass_base,
            span,
            error_mass_cap,
            yield_floor,
        };
        p.validate()?;
        Ok(p)
    }

    /// Instance without an independent yield floor: `E = A`, so the floor
    /// constraint is inactive (`y >= 0` already gives `A + C y >= A`).
    pub fn without_floor(
        yield_base: T,
        error_mass_base: T,
        span: T,
        error_mass_cap: T,
    ) -> Result<Self> {
        Self::new(
            yield_base,
            error_mass_base,
            span,
            error_mass_cap,
            yield_base,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidMinProblem(msg));
        let all_finite = [
            self.yield_base,
            self.error_mass_base,
            self.span,
            self.error_mass_cap,
            self.yield_floor,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return fail("non-finite constant".into());
        }
        if self.yield_base <= T::zero() {
            return fail(format!(
                "yield base must be positive, got {:?}",
                self.yield_base
            ));
        }
        if self.span <= T::zero() {
            return fail(format!("span must be positive, got {:?}", self.span));
        }
        if self.error_mass_base < T::zero() {
            return fail(format!(
                "error mass base must be nonnegative, got {:?}",
                self.error_mass_base
            ));
        }
        if self.error_mass_base > self.error_mass_cap {
            return fail(format!(
                "empty feasible set: error mass base {:?} exceeds cap {:?}",
                self.error_mass_base, self.error_mass_cap
            ));
        }
        if self.yield_floor > self.yield_base + self.span {
            return fail(format!(
                "empty feasible set: yield floor {:?} exceeds {:?}",
                self.yield_floor,
                self.yield_base + self.span
            ));
        }
        Ok(())
    }

    /// Objective value at `(x, y)`; errors if the entropy argument leaves
    /// the unit interval.
    pub fn objective(&self, x: T, y: T) -> Result<T> {
        let den = self.yield_base + self.span * y;
        let ratio = (self.error_mass_base + self.span * x * y) / den;
        Ok(den * (T::one() - binary_entropy(ratio)?))
    }

    /// Objective with the entropy argument assumed inside `[0, 1]`.
    fn objective_unchecked(&self, numerator: T, denominator: T) -> T {
        let r = numerator / denominator;
        let h = plogp_fast(r) + plogp_fast(T::one() - r);
        denominator * (T::one() - h)
    }
}

#[inline]
fn plogp_fast<T: Real>(p: T) -> T {
    if p <= T::zero() {
        T::zero()
    } else {
        -(p * p.ln()) / T::LN_2()
    }
}

/// Border case the minimum lands on.
///
/// 1: error-mass cap reached inside the square (`D - B < C`, above the
/// floor); 2: cap meets the yield floor first (`D - B < E - A`); 3: span
/// exhausted before the cap (`D - B >= C`), minimum at the far corner.
pub type CaseId = u8;

/// Location and value of a minimization result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSolution<T> {
    pub case_id: CaseId,
    pub x: T,
    pub y: T,
    pub value: T,
}

/// Closed-form minimum over the border.
///
/// Case 1 (`D-B < C`, `D-B > E-A`): `(A+D-B)[1 - H(D/(A+D-B))]` at
/// `(1, (D-B)/C)`. Case 2 (`D-B < C`, `D-B < E-A`): `E[1 - H(D/E)]` at
/// `((D-B)/(E-A), (E-A)/C)`. Case 3 (`D-B >= C`): `(A+C)[1 - H((B+C)/(A+C))]`
/// at `(1, 1)`. Ties between cases are settled by evaluating every
/// qualifying candidate and keeping the smallest value.
pub fn corollary_min<T: Real>(problem: &MinProblem<T>) -> Result<MinSolution<T>> {
    problem.validate()?;
    let half = real::<T>(0.5);
    let (a, b, c, d, e) = (
        problem.yield_base,
        problem.error_mass_base,
        problem.span,
        problem.error_mass_cap,
        problem.yield_floor,
    );
    let cap_slack = d - b;
    let floor_slack = e - a;

    // (case, x, y, entropy argument, value)
    let mut candidates: Vec<(CaseId, T, T, T, T)> = Vec::with_capacity(2);
    if cap_slack <= c && cap_slack >= floor_slack {
        let den = a + cap_slack;
        candidates.push((1, T::one(), cap_slack / c, d / den, den));
    }
    if cap_slack <= c && cap_slack <= floor_slack && floor_slack > T::zero() {
        candidates.push((2, cap_slack / floor_slack, floor_slack / c, d / e, e));
    }
    if cap_slack >= c {
        let den = a + c;
        candidates.push((3, T::one(), T::one(), (b + c) / den, den));
    }

    let mut best: Option<MinSolution<T>> = None;
    for (case_id, x, y, ratio, den) in candidates {
        if ratio >= half {
            continue;
        }
        let value = den * (T::one() - binary_entropy(ratio)?);
        let better = match &best {
            None => true,
            Some(cur) => value < cur.value,
        };
        if better {
            best = Some(MinSolution {
                case_id,
                x,
                y,
                value,
            });
        }
    }
    best.ok_or(Error::InfeasibleDomain)
}

/// Reduced border profile `g(y) = (A + y)[1 - H((B + y)/(A + y))]`.
pub fn reduced_objective<T: Real>(yield_base: T, error_mass_base: T, y: T) -> Result<T> {
    let den = yield_base + y;
    Ok(den * (T::one() - binary_entropy((error_mass_base + y) / den)?))
}

/// Analytic derivative of the reduced profile:
/// `g'(y) = 1 + log2((B + y)/(A + y))`, negative while the ratio is below 1/2.
pub fn reduced_derivative<T: Real>(yield_base: T, error_mass_base: T, y: T) -> T {
    ((error_mass_base + y) / (yield_base + y)).log2() + T::one()
}

/// Exhaustive-scan result: the grid minimum plus a slope estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridScan<T> {
    pub minimum: MinSolution<T>,
    /// Twice the largest adjacent-difference quotient observed between
    /// feasible grid neighbors; the factor covers diagonal displacement to
    /// an off-grid border minimizer.
    pub lipschitz: T,
}

/// Exhaustive evaluation of the objective over the feasible grid.
///
/// The feasible points of each row form a prefix in `x` (the error mass
/// grows with `x`), so rows are scanned up to their last feasible column.
/// The minimum is the smallest feasible value, ties broken toward smaller
/// `y` then smaller `x`; the case id is the closed-form candidate nearest
/// to the located minimizer.
pub fn grid_oracle_min<T: Real>(
    problem: &MinProblem<T>,
    resolution: usize,
) -> Result<MinSolution<T>> {
    Ok(grid_scan(problem, resolution)?.minimum)
}

/// [`grid_oracle_min`] plus the slope estimate used for oracle tolerances.
pub fn grid_scan<T: Real>(problem: &MinProblem<T>, resolution: usize) -> Result<GridScan<T>> {
    problem.validate()?;
    if resolution < MIN_GRID_RESOLUTION {
        return Err(Error::ResolutionTooSmall {
            resolution,
            minimum: MIN_GRID_RESOLUTION,
        });
    }

    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8);
    let chunk_rows = resolution.div_ceil(threads);
    let mut partials: Vec<ScanPartial<T>> = Vec::with_capacity(threads);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(threads);
        for chunk in 0..threads {
            let row_start = chunk * chunk_rows;
            let row_end = ((chunk + 1) * chunk_rows).min(resolution);
            if row_start >= row_end {
                continue;
            }
            handles.push(scope.spawn(move || scan_rows(problem, resolution, row_start, row_end)));
        }
        for handle in handles {
            partials.push(handle.join().expect("scan worker panicked"));
        }
    });

    let mut best: Option<(T, T, T)> = None; // (value, y, x)
    let mut lipschitz = T::zero();
    for partial in partials {
        lipschitz = lipschitz.max(partial.max_slope);
        if let Some(candidate) = partial.best {
            let replace = match best {
                None => true,
                Some(cur) => candidate < cur,
            };
            if replace {
                best = Some(candidate);
            }
        }
    }
    let (value, y, x) = best.ok_or(Error::EmptyFeasibleGrid)?;
    let case_id = classify_case(problem, x, y);
    Ok(GridScan {
        minimum: MinSolution {
            case_id,
            x,
            y,
            value,
        },
        lipschitz: lipschitz * real(LIPSCHITZ_SAFETY),
    })
}

struct ScanPartial<T> {
    best: Option<(T, T, T)>,
    max_slope: T,
}

/// Scan rows `[row_start, row_end)`; also evaluates row `row_start - 1`
/// so vertical neighbor differences cross chunk boundaries.
fn scan_rows<T: Real>(
    problem: &MinProblem<T>,
    resolution: usize,
    row_start: usize,
    row_end: usize,
) -> ScanPartial<T> {
    let half = real::<T>(0.5);
    let step = T::one() / real::<T>((resolution - 1) as f64);
    let (a, b, c, d, e) = (
        problem.yield_base,
        problem.error_mass_base,
        problem.span,
        problem.error_mass_cap,
        problem.yield_floor,
    );

    let mut best: Option<(T, T, T)> = None;
    let mut max_diff = T::zero(); // largest |delta f| between grid neighbors
    let mut prev_row: Vec<T> = Vec::new();
    let mut row: Vec<T> = Vec::with_capacity(resolution);

    let first = row_start.saturating_sub(1);
    for j in first..row_end {
        let y = real::<T>(j as f64) * step;
        let den = a + c * y;
        row.clear();
        if den >= e {
            let cy = c * y;
            for i in 0..resolution {
                let x = real::<T>(i as f64) * step;
                let num = b + cy * x;
                if num > d || num >= half * den {
                    break;
                }
                let value = problem.objective_unchecked(num, den);
                if i > 0 {
                    if let Some(&left) = row.last() {
                        max_diff = max_diff.max((value - left).abs());
                    }
                }
                row.push(value);
            }
        }
        let in_chunk = j >= row_start;
        if in_chunk {
            for (&above, &below) in row.iter().zip(prev_row.iter()) {
                max_diff = max_diff.max((above - below).abs());
            }
        }
        if in_chunk {
            for (i, &value) in row.iter().enumerate() {
                let x = real::<T>(i as f64) * step;
                let candidate = (value, y, x);
                let replace = match best {
                    None => true,
                    Some(cur) => candidate < cur,
                };
                if replace {
                    best = Some(candidate);
                }
            }
        }
        std::mem::swap(&mut prev_row, &mut row);
    }

    ScanPartial {
        best,
        max_slope: max_diff / step,
    }
}

/// Nearest closed-form candidate point to a located grid minimizer.
fn classify_case<T: Real>(problem: &MinProblem<T>, x: T, y: T) -> CaseId {
    let (a, b, c, d, e) = (
        problem.yield_base,
        problem.error_mass_base,
        problem.span,
        problem.error_mass_cap,
        problem.yield_floor,
    );
    let cap_slack = d - b;
    let floor_slack = e - a;
    let mut candidates: Vec<(CaseId, T, T)> = Vec::new();
    if cap_slack <= c && cap_slack >= floor_slack {
        candidates.push((1, T::one(), cap_slack / c));
    }
    if cap_slack <= c && cap_slack <= floor_slack && floor_slack > T::zero() {
        candidates.push((2, cap_slack / floor_slack, floor_slack / c));
    }
    if cap_slack >= c {
        candidates.push((3, T::one(), T::one()));
    }
    candidates
        .into_iter()
        .map(|(id, cx, cy)| {
            let (dx, dy) = (cx - x, cy - y);
            (id, dx * dx + dy * dy)
        })
        .min_by(|(ia, da), (ib, db)| da.partial_cmp(db).unwrap().then(ia.cmp(ib)))
        .map(|(id, _)| id)
        .unwrap_or(1)
}

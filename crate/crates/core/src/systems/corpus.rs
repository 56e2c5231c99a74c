//! The example corpus: planar and spatial systems whose limit measures are
//! known, each with its labelled invariant sets.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use super::{
    gradient_system, hamiltonian_system, ClassifyScale, KnownStructure, LabeledRegion, LimitComponent, LimitMeasure,
    RegionLabel, ScalarMap, SystemSpec, VectorField,
};
use crate::region::{Region, ScalarField};

pub const CORPUS_NAMES: [&str; 15] = [
    "closed_orbit_v1",
    "closed_orbit_v2",
    "accumulation",
    "figure_eight_1",
    "figure_eight_2",
    "figure_eight_g3",
    "figure_eight_g4",
    "saddle_node1",
    "saddle_node2",
    "kifer",
    "van_der_pol_variational",
    "cooperative_3d",
    "twoco",
    "prnot",
    "gradient_dw2",
];

pub fn builtin_corpus() -> Vec<SystemSpec> {
    CORPUS_NAMES.iter().map(|n| corpus_system(n).expect("corpus name")).collect()
}

pub fn corpus_system(name: &str) -> Option<SystemSpec> {
    Some(match name {
        "closed_orbit_v1" => closed_orbit_v1(),
        "closed_orbit_v2" => closed_orbit_v2(),
        "accumulation" => accumulation(),
        "figure_eight_1" => figure_eight(1),
        "figure_eight_2" => figure_eight(2),
        "figure_eight_g3" => figure_eight_g(3),
        "figure_eight_g4" => figure_eight_g(4),
        "saddle_node1" => saddle_node1(),
        "saddle_node2" => saddle_node2(),
        "kifer" => kifer(),
        "van_der_pol_variational" => van_der_pol_variational(0.5, 0.5),
        "cooperative_3d" => cooperative_3d(),
        "twoco" => twoco(),
        "prnot" => prnot(),
        "gradient_dw2" => gradient_dw2(),
        _ => return None,
    })
}

/// Structured plain-text description of every corpus system.
pub fn catalog() -> String {
    let mut out = String::new();
    for s in builtin_corpus() {
        out.push_str(&format!("[{}]\n", s.name));
        out.push_str(&format!("dim = {}\nsafe_radius = {}\n", s.dim, s.safe_radius));
        for line in s.equations.lines() {
            out.push_str(&format!("equation = {line}\n"));
        }
        for e in &s.metadata.equilibria {
            out.push_str(&format!("equilibrium = {e:?}\n"));
        }
        for r in &s.metadata.invariant_regions {
            out.push_str(&format!("region {} = {} : {}\n", r.name, r.label.as_str(), r.region.describe()));
        }
        out.push_str(&format!("expected_limit = {}\n", s.metadata.expected_limit.describe()));
        if s.metadata.exact_density_potential.is_some() {
            out.push_str("exact_density = C(eps) exp(-2 U / eps^2)\n");
        }
        out.push('\n');
    }
    out
}

fn planar(f: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static) -> VectorField {
    Arc::new(move |x: &[f64], o: &mut [f64]| {
        let (a, b) = f(x[0], x[1]);
        o[0] = a;
        o[1] = b;
    })
}

fn origin() -> Vec<f64> {
    vec![0.0, 0.0]
}

fn labeled(name: &str, region: Region, label: RegionLabel, probe: Option<(f64, f64, f64)>) -> LabeledRegion {
    LabeledRegion {
        name: name.into(),
        region,
        label,
        probe: probe.map(|(shell_delta, escape_time, dt)| ClassifyScale { shell_delta, escape_time, dt }),
    }
}

fn point(p: Vec<f64>) -> Region {
    Region::ball(p, 0.0).unwrap()
}

fn circle(r: f64) -> Region {
    Region::circle_shell(origin(), r, 0.0).unwrap()
}

/// `H = -(x₁²+x₂²)/2` turns `ℋ(H) - F(H)∇H` into `(-x₂ + x₁f(r²), x₁ + x₂f(r²))`
/// with `F(h) = f(-2h)`.
fn radial_hamiltonian(f: impl Fn(f64) -> f64 + Send + Sync + 'static, name: &str, safe: f64) -> SystemSpec {
    let h: ScalarField = Arc::new(|x: &[f64]| -0.5 * (x[0] * x[0] + x[1] * x[1]));
    let g: VectorField = Arc::new(|x: &[f64], o: &mut [f64]| {
        o[0] = -x[0];
        o[1] = -x[1];
    });
    let ff: ScalarMap = Arc::new(move |hv: f64| f(-2.0 * hv));
    hamiltonian_system(h, g, ff, name, safe).expect("consistent gradient")
}

/// `f(s) = (4 - s)·t³/(1 + t³)` with `t = s - 1` for `s > 1`, zero on `[0, 1]`.
pub fn closed_orbit_f1(s: f64) -> f64 {
    if s <= 1.0 {
        0.0
    } else {
        let t3 = (s - 1.0).powi(3);
        (4.0 - s) * t3 / (1.0 + t3)
    }
}

/// `-(1 - s)³` below 1, zero on `[1, 4]`, `-t³/(1 + t³)` with `t = s - 4` above.
pub fn closed_orbit_f2(s: f64) -> f64 {
    if s < 1.0 {
        -(1.0 - s).powi(3)
    } else if s <= 4.0 {
        0.0
    } else {
        let t3 = (s - 4.0).powi(3);
        -t3 / (1.0 + t3)
    }
}

fn closed_orbit_v1() -> SystemSpec {
    let disk = Region::ball(origin(), 1.0).unwrap();
    radial_hamiltonian(closed_orbit_f1, "closed_orbit_v1", 4.0)
        .with_equations(
            "dx1 = (-x2 + x1 f(x1^2+x2^2)) dt + eps dw1\n\
             dx2 = ( x1 + x2 f(x1^2+x2^2)) dt + eps dw2\n\
             f(s) = 0 on [0,1]; (4-s)(s-1)^3/(1+(s-1)^3) for s > 1",
        )
        .with_metadata(KnownStructure {
            invariant_regions: vec![
                labeled("disk", disk.clone(), RegionLabel::Repeller, Some((0.1, 100.0, 0.01))),
                labeled("disk_class", disk, RegionLabel::EquivalentClass, None),
                labeled("circle_r2", circle(2.0), RegionLabel::Attractor, Some((0.1, 50.0, 0.005))),
            ],
            equilibria: vec![origin()],
            expected_limit: LimitMeasure::weighted(vec![(
                LimitComponent::UniformCircle { center: origin(), radius: 2.0 },
                1.0,
            )])
            .unwrap(),
            exact_density_potential: None,
            default_start: vec![2.0, 0.0],
        })
}

fn closed_orbit_v2() -> SystemSpec {
    radial_hamiltonian(closed_orbit_f2, "closed_orbit_v2", 4.0)
        .with_equations(
            "dx1 = (-x2 + x1 f(x1^2+x2^2)) dt + eps dw1\n\
             dx2 = ( x1 + x2 f(x1^2+x2^2)) dt + eps dw2\n\
             f(s) = -(1-s)^3 on [0,1); 0 on [1,4]; -(s-4)^3/(1+(s-4)^3) for s > 4",
        )
        .with_metadata(KnownStructure {
            invariant_regions: vec![
                labeled("origin", point(origin()), RegionLabel::Attractor, Some((0.1, 50.0, 0.01))),
                labeled(
                    "annulus_class",
                    Region::annulus(origin(), 1.0, 2.0).unwrap(),
                    RegionLabel::EquivalentClass,
                    None,
                ),
            ],
            equilibria: vec![origin()],
            expected_limit: LimitMeasure::weighted(vec![(LimitComponent::Point(origin()), 1.0)]).unwrap(),
            exact_density_potential: None,
            default_start: vec![0.0, 0.0],
        })
}

/// `(1 - s)⁵ sin²(1/(1 - s))`, zero at `s = 1`.
pub fn accumulation_f(s: f64) -> f64 {
    let u = 1.0 - s;
    if u == 0.0 {
        0.0
    } else {
        u.powi(5) * (1.0 / u).sin().powi(2)
    }
}

fn accumulation() -> SystemSpec {
    let gamma = |n: f64| (1.0 - 1.0 / (n * PI)).sqrt();
    let r_out = gamma(-1.0);
    let drift = planar(|x, y| {
        let f = accumulation_f(x * x + y * y);
        (-y + x * f, x + y * f)
    });
    SystemSpec::new("accumulation", 2, drift, 2.0 * r_out)
        .with_equations(
            "dx1 = (-x2 + x1 (1-r^2)^5 sin^2(1/(1-r^2))) dt + eps dw1\n\
             dx2 = ( x1 + x2 (1-r^2)^5 sin^2(1/(1-r^2))) dt + eps dw2",
        )
        .with_metadata(KnownStructure {
            invariant_regions: vec![
                labeled("origin", point(origin()), RegionLabel::Repeller, Some((0.1, 50.0, 0.01))),
                labeled("unit_circle", circle(1.0), RegionLabel::EquivalentClass, None),
                labeled("gamma_1", circle(gamma(1.0)), RegionLabel::SaddleChainElement, None),
                labeled("gamma_-1", circle(gamma(-1.0)), RegionLabel::SaddleChainElement, None),
                labeled("gamma_2", circle(gamma(2.0)), RegionLabel::SaddleChainElement, None),
                labeled("gamma_-2", circle(gamma(-2.0)), RegionLabel::SaddleChainElement, None),
                labeled(
                    "r_1",
                    Region::annulus(origin(), gamma(1.0), gamma(-1.0)).unwrap(),
                    RegionLabel::Attractor,
                    None,
                ),
            ],
            equilibria: vec![origin()],
            expected_limit: LimitMeasure::weighted(vec![(
                LimitComponent::UniformCircle { center: origin(), radius: 1.0 },
                1.0,
            )])
            .unwrap(),
            exact_density_potential: None,
            default_start: vec![1.0, 0.0],
        })
}

/// `H = x₂²/2 + x₁⁴/4 - x₁²/2`.
pub fn figure_eight_h(x: &[f64]) -> f64 {
    0.5 * x[1] * x[1] + 0.25 * x[0].powi(4) - 0.5 * x[0] * x[0]
}

fn figure_eight_grad(x: &[f64], o: &mut [f64]) {
    o[0] = x[0].powi(3) - x[0];
    o[1] = x[1];
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// `F_i` for `i = 1, 2`.
pub fn figure_eight_f(i: u32, s: f64) -> f64 {
    if s < 0.0 {
        let sign = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * s.abs().powi(3)
    } else if s == 0.0 {
        0.0
    } else if s <= 1.0 {
        s.powi(5) * (PI / s).sin().powi(2)
    } else if s < 2.0 {
        smoothstep(s - 1.0)
    } else {
        1.0
    }
}

/// `exp(-1/t)`-based C∞ step from 0 at `t = 0` to 1 at `t = 1`.
fn smooth_transition(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Cut-off function vanishing exactly on `I = ∪ [1/(2n), 1/(2n-1)]`.
///
/// On each gap `(1/(2n+1), 1/(2n))` it is a C∞ bump of height `e^{-n}`, and
/// it climbs smoothly from 0 to 1 on `[1, 2]`.
pub fn cutoff_g(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return smooth_transition(s - 1.0);
    }
    // s lies in I_n iff 1/(2n) <= s <= 1/(2n-1) iff 2n-1 <= 1/s <= 2n
    let inv = 1.0 / s;
    let k = inv.floor();
    if k == inv || (k as i64) % 2 == 1 {
        return 0.0;
    }
    // here 2n < 1/s < 2n+1 for n = k/2: the gap (1/(2n+1), 1/(2n))
    let n = k / 2.0;
    let lo = 1.0 / (2.0 * n + 1.0);
    let hi = 1.0 / (2.0 * n);
    let u = (s - lo) / (hi - lo);
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    (-n).exp() * (4.0 - 1.0 / (u * (1.0 - u))).exp()
}

fn figure_eight_regions(attracting_wells: bool) -> Vec<LabeledRegion> {
    let h: ScalarField = Arc::new(figure_eight_h);
    let level_set = |c: f64| -> Region {
        let f: ScalarField = Arc::new(move |x: &[f64]| (figure_eight_h(x) - c).abs());
        Region::sublevel(f, 0.0, origin(), 2.0, format!("|H - {c}|")).unwrap()
    };
    let wells = if attracting_wells { RegionLabel::Attractor } else { RegionLabel::Repeller };
    vec![
        labeled("well_plus", point(vec![1.0, 0.0]), wells, Some((0.1, 150.0, 0.01))),
        labeled("well_minus", point(vec![-1.0, 0.0]), wells, Some((0.1, 150.0, 0.01))),
        labeled("saddle_origin", point(origin()), RegionLabel::SaddleChainElement, None),
        labeled("h_le_1", Region::sublevel(h, 1.0, origin(), 1.9, "H").unwrap(), RegionLabel::Attractor, None),
        labeled("cycle_h_1", level_set(1.0), RegionLabel::SaddleChainElement, None),
        labeled("cycle_h_half", level_set(0.5), RegionLabel::SaddleChainElement, None),
    ]
}

fn figure_eight_limit(attracting_wells: bool) -> LimitMeasure {
    if attracting_wells {
        LimitMeasure::SupportedOn(vec![LimitComponent::Point(vec![1.0, 0.0]), LimitComponent::Point(vec![-1.0, 0.0])])
    } else {
        LimitMeasure::weighted(vec![(LimitComponent::Point(origin()), 1.0)]).unwrap()
    }
}

fn figure_eight(i: u32) -> SystemSpec {
    let name = format!("figure_eight_{i}");
    let f: ScalarMap = Arc::new(move |s| figure_eight_f(i, s));
    let sign = if i.is_multiple_of(2) { "+" } else { "-" };
    hamiltonian_system(Arc::new(figure_eight_h), Arc::new(figure_eight_grad), f, name, 3.6)
        .expect("consistent gradient")
        .with_equations(format!(
            "dx = [H_vec(H) - F(H) grad H] dt + eps dw, H = x2^2/2 + x1^4/4 - x1^2/2\n\
             H_vec(H) = (dH/dx2, -dH/dx1)\n\
             F(s) = {sign}|s|^3 on [-1/4,0); s^5 sin^2(pi/s) on [0,1]; smoothstep on (1,2); 1 on [2,inf)"
        ))
        .with_metadata(KnownStructure {
            invariant_regions: figure_eight_regions(i.is_multiple_of(2)),
            equilibria: vec![origin(), vec![1.0, 0.0], vec![-1.0, 0.0]],
            expected_limit: figure_eight_limit(i.is_multiple_of(2)),
            exact_density_potential: None,
            default_start: vec![0.0, 0.5],
        })
}

fn figure_eight_g(j: u32) -> SystemSpec {
    let name = format!("figure_eight_g{j}");
    let f: ScalarMap = Arc::new(move |s| if s < 0.0 { figure_eight_f(j, s) } else { cutoff_g(s) });
    let sign = if j.is_multiple_of(2) { "+" } else { "-" };
    let mut regions = figure_eight_regions(j.is_multiple_of(2));
    // the first nested annulus H^{-1}([1/2, 1]) is an equivalent class
    let band: ScalarField = Arc::new(|x: &[f64]| (figure_eight_h(x) - 0.75).abs());
    regions.push(labeled(
        "band_i1",
        Region::sublevel(band, 0.25, origin(), 1.9, "|H - 3/4|").unwrap(),
        RegionLabel::EquivalentClass,
        None,
    ));
    hamiltonian_system(Arc::new(figure_eight_h), Arc::new(figure_eight_grad), f, name, 3.6)
        .expect("consistent gradient")
        .with_equations(format!(
            "dx = [H_vec(H) - F(H) grad H] dt + eps dw, H = x2^2/2 + x1^4/4 - x1^2/2\n\
             F(s) = {sign}|s|^3 on [-1/4,0); G(s) on [0,inf)\n\
             G = 0 on I_n = [1/(2n), 1/(2n-1)], e^-n C-infinity bumps on the gaps, C-infinity step to 1 on [1,2]"
        ))
        .with_metadata(KnownStructure {
            invariant_regions: regions,
            equilibria: vec![origin(), vec![1.0, 0.0], vec![-1.0, 0.0]],
            expected_limit: figure_eight_limit(j.is_multiple_of(2)),
            exact_density_potential: None,
            default_start: vec![0.0, 0.5],
        })
}

fn saddle_node1() -> SystemSpec {
    let drift = planar(|x, y| {
        let g = 1.0 - x * x - y * y;
        (x * g - y * (1.0 + x), x * (1.0 + x) + y * g)
    });
    SystemSpec::new("saddle_node1", 2, drift, 2.0)
        .with_equations(
            "dx1 = [x1(1-x1^2-x2^2) - x2(1+x1)] dt + eps dw1\n\
             dx2 = [x1(1+x1) + x2(1-x1^2-x2^2)] dt + eps dw2",
        )
        .with_metadata(KnownStructure {
            invariant_regions: vec![
                labeled("origin", point(origin()), RegionLabel::Repeller, Some((0.1, 50.0, 0.01))),
                labeled("unit_circle", circle(1.0), RegionLabel::Attractor, Some((0.1, 50.0, 0.01))),
                labeled("q", point(vec![-1.0, 0.0]), RegionLabel::SaddleChainElement, None),
            ],
            equilibria: vec![origin(), vec![-1.0, 0.0]],
            expected_limit: LimitMeasure::weighted(vec![(LimitComponent::Point(vec![-1.0, 0.0]), 1.0)]).unwrap(),
            exact_density_potential: None,
            default_start: vec![1.0, 0.0],
        })
}

fn saddle_node2() -> SystemSpec {
    let drift = planar(|x, y| {
        let s = x * x + y * y;
        let g = s * (1.0 - s);
        (x * g - 2.0 * y.powi(3), y * g + 2.0 * x * y * y)
    });
    SystemSpec::new("saddle_node2", 2, drift, 2.0)
        .with_equations(
            "dx1 = [x1(x1^2+x2^2)(1-x1^2-x2^2) - 2 x2^3] dt + eps dw1\n\
             dx2 = [x2(x1^2+x2^2)(1-x1^2-x2^2) + 2 x1 x2^2] dt + eps dw2",
        )
        .with_metadata(KnownStructure {
            invariant_regions: vec![
                labeled("origin", point(origin()), RegionLabel::Repeller, Some((0.2, 400.0, 0.05))),
                labeled("unit_circle", circle(1.0), RegionLabel::Attractor, Some((0.1, 50.0, 0.01))),
                labeled("node_plus", point(vec![1.0, 0.0]), RegionLabel::SaddleChainElement, None),
                labeled("node_minus", point(vec![-1.0, 0.0]), RegionLabel::SaddleChainElement, None),
            ],
            equilibria: vec![origin(), vec![1.0, 0.0], vec![-1.0, 0.0]],
            expected_limit: LimitMeasure::SupportedOn(vec![
                LimitComponent::Point(vec![1.0, 0.0]),
                LimitComponent::Point(vec![-1.0, 0.0]),
            ]),
            exact_density_potential: None,
            default_start: vec![0.0, 1.0],
        })
}

fn kifer() -> SystemSpec {
    let drift = planar(|x, y| {
        let s = x * x + y * y;
        let g = s * (1.0 - s);
        let w = s.sqrt() - x;
        (x * g - x * y * w, y * g + x * x * w)
    });
    SystemSpec::new("kifer", 2, drift, 2.0)
        .with_equations(
            "dx1/dt = x1(x1^2+x2^2)(1-x1^2-x2^2) - x1 x2 (sqrt(x1^2+x2^2) - x1)\n\
             dx2/dt = x2(x1^2+x2^2)(1-x1^2-x2^2) + x1^2 (sqrt(x1^2+x2^2) - x1)",
        )
        .with_metadata(KnownStructure {
            invariant_regions: vec![
                labeled("origin", point(origin()), RegionLabel::Repeller, Some((0.2, 400.0, 0.05))),
                labeled("unit_circle", circle(1.0), RegionLabel::Attractor, Some((0.1, 50.0, 0.01))),
                labeled("b_node", point(vec![0.0, 1.0]), RegionLabel::Attractor, Some((0.05, 400.0, 0.02))),
                labeled("a_saddle_node", point(vec![1.0, 0.0]), RegionLabel::SaddleChainElement, None),
                labeled("c_saddle", point(vec![0.0, -1.0]), RegionLabel::SaddleChainElement, None),
            ],
            equilibria: vec![origin(), vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            expected_limit: LimitMeasure::weighted(vec![(LimitComponent::Point(vec![0.0, 1.0]), 1.0)]).unwrap(),
            exact_density_potential: None,
            default_start: vec![0.0, 1.0],
        })
}

/// Variational equation of the forced van der Pol oscillator at `(σ, γ)`.
pub fn van_der_pol_variational(sigma: f64, gamma: f64) -> SystemSpec {
    let drift = planar(move |u, v| {
        let s = u * u + v * v;
        (u - sigma * v - u * s, sigma * u + v - v * s - gamma)
    });
    SystemSpec::new("van_der_pol_variational", 2, drift, 4.0)
        .with_equations(format!(
            "du = [u - {sigma} v - u(u^2+v^2)] dt + eps dw1\n\
             dv = [{sigma} u + v - v(u^2+v^2) - {gamma}] dt + eps dw2"
        ))
        .with_metadata(KnownStructure { default_start: vec![1.0, 0.0], ..KnownStructure::empty(2) })
}

fn cooperative_3d() -> SystemSpec {
    let drift: VectorField = Arc::new(|x: &[f64], o: &mut [f64]| {
        o[0] = -x[0] + x[2] / (1.0 + x[2].abs());
        o[1] = x[0] - x[1];
        o[2] = x[1] - 0.5 * x[2];
    });
    let p_plus = vec![0.5, 0.5, 1.0];
    let p_minus = vec![-0.5, -0.5, -1.0];
    let safe = 2.0 * (0.25f64 + 0.25 + 1.0).sqrt();
    SystemSpec::new("cooperative_3d", 3, drift, safe)
        .with_equations("dX = (-x1 + x3/(1+|x3|), x1 - x2, x2 - x3/2) dt + eps dw")
        .with_metadata(KnownStructure {
            invariant_regions: vec![
                labeled("p_plus", point(p_plus.clone()), RegionLabel::Attractor, Some((0.1, 100.0, 0.01))),
                labeled("p_minus", point(p_minus.clone()), RegionLabel::Attractor, Some((0.1, 100.0, 0.01))),
                labeled("saddle_origin", point(vec![0.0; 3]), RegionLabel::SaddleChainElement, None),
            ],
            equilibria: vec![vec![0.0; 3], p_plus.clone(), p_minus.clone()],
            expected_limit: LimitMeasure::weighted(vec![
                (LimitComponent::Point(p_plus), 0.5),
                (LimitComponent::Point(p_minus), 0.5),
            ])
            .unwrap(),
            exact_density_potential: None,
            default_start: vec![0.5, 0.5, 1.0],
        })
}

/// Crossing of the TwoCO cycle `H = -1/8` with the positive `x₁` axis.
pub fn twoco_cycle_x() -> f64 {
    (1.0 + 1.0 / SQRT_2).sqrt()
}

/// Neighbourhood `{sign·x₁ > 0, |H + 1/8| ≤ width}` of one TwoCO limit cycle
/// (`sign = ±1`); a penalty on the wrong half plane keeps the field continuous.
pub fn twoco_cycle_shell(sign: f64, width: f64) -> Region {
    let f: ScalarField = Arc::new(move |x: &[f64]| (figure_eight_h(x) + 0.125).abs() + 10.0 * (-sign * x[0]).max(0.0));
    Region::sublevel(f, width, vec![sign, 0.0], 0.6 + width, format!("|H + 1/8| (side {sign})")).unwrap()
}

fn twoco() -> SystemSpec {
    let f: ScalarMap = Arc::new(|s| s + 0.125);
    let cx = twoco_cycle_x();
    hamiltonian_system(Arc::new(figure_eight_h), Arc::new(figure_eight_grad), f, "twoco", 2.0 * cx)
        .expect("consistent gradient")
        .with_equations(
            "dX = [H_vec(H) - (H + 1/8) grad H] dt + eps dw, H = x1^4/4 - x1^2/2 + x2^2/2\n\
             H_vec(H) = (x2, -(x1^3 - x1))",
        )
        .with_metadata(KnownStructure {
            invariant_regions: vec![
                labeled("p_plus", point(vec![1.0, 0.0]), RegionLabel::Repeller, Some((0.1, 50.0, 0.01))),
                labeled("p_minus", point(vec![-1.0, 0.0]), RegionLabel::Repeller, Some((0.1, 50.0, 0.01))),
                labeled("gamma_plus", twoco_cycle_shell(1.0, 0.0), RegionLabel::Attractor, Some((0.05, 60.0, 0.01))),
                labeled("gamma_minus", twoco_cycle_shell(-1.0, 0.0), RegionLabel::Attractor, Some((0.05, 60.0, 0.01))),
                labeled("saddle_origin", point(origin()), RegionLabel::SaddleChainElement, None),
            ],
            equilibria: vec![origin(), vec![1.0, 0.0], vec![-1.0, 0.0]],
            expected_limit: LimitMeasure::weighted(vec![
                (LimitComponent::OrbitAverage { through: vec![cx, 0.0] }, 0.5),
                (LimitComponent::OrbitAverage { through: vec![-cx, 0.0] }, 0.5),
            ])
            .unwrap(),
            exact_density_potential: None,
            default_start: vec![cx, 0.0],
        })
}

/// `U = s³/6 - 3s²/4 + s` with `s = x² + y²`.
pub fn prnot_potential(x: &[f64]) -> f64 {
    let s = x[0] * x[0] + x[1] * x[1];
    s * s * s / 6.0 - 0.75 * s * s + s
}

fn prnot() -> SystemSpec {
    let drift = planar(|x, y| {
        let s = x * x + y * y;
        let g = (s - 1.0) * (s - 2.0);
        (y - x * g, -x - y * g)
    });
    SystemSpec::new("prnot", 2, drift, 2.0 * SQRT_2)
        .with_equations(
            "dx = [y - x(x^2+y^2-1)(x^2+y^2-2)] dt + eps dw1\n\
             dy = [-x - y(x^2+y^2-1)(x^2+y^2-2)] dt + eps dw2\n\
             U = (x^2+y^2)^3/6 - 3(x^2+y^2)^2/4 + x^2 + y^2",
        )
        .with_metadata(KnownStructure {
            invariant_regions: vec![
                labeled("origin", point(origin()), RegionLabel::Attractor, Some((0.1, 50.0, 0.01))),
                labeled("gamma1", circle(1.0), RegionLabel::Repeller, Some((0.1, 50.0, 0.01))),
                labeled("gamma2", circle(SQRT_2), RegionLabel::Attractor, Some((0.1, 50.0, 0.01))),
                labeled(
                    "unit_disk",
                    Region::ball(origin(), 1.0).unwrap(),
                    RegionLabel::Repeller,
                    Some((0.1, 50.0, 0.01)),
                ),
            ],
            equilibria: vec![origin()],
            expected_limit: LimitMeasure::weighted(vec![(LimitComponent::Point(origin()), 1.0)]).unwrap(),
            exact_density_potential: Some(Arc::new(prnot_potential)),
            default_start: origin(),
        })
}

/// `F = Σ xᵢ²(xᵢ - 1)²`.
pub fn double_well_potential(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v * (v - 1.0) * (v - 1.0)).sum()
}

fn gradient_dw2() -> SystemSpec {
    let grad: VectorField = Arc::new(|x: &[f64], o: &mut [f64]| {
        for (oi, v) in o.iter_mut().zip(x) {
            *oi = 2.0 * v * (v - 1.0) * (2.0 * v - 1.0);
        }
    });
    let mut spec = gradient_system(Arc::new(double_well_potential), grad, 2, "gradient_dw2", 2.0 * SQRT_2);
    let minima = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    let saddles = [[0.5, 0.0], [0.0, 0.5], [1.0, 0.5], [0.5, 1.0]];
    let mut regions = Vec::new();
    for m in minima {
        regions.push(labeled(
            &format!("min_{}_{}", m[0], m[1]),
            point(m.to_vec()),
            RegionLabel::Attractor,
            Some((0.1, 30.0, 0.01)),
        ));
    }
    for s in saddles {
        regions.push(labeled(
            &format!("saddle_{}_{}", s[0], s[1]),
            point(s.to_vec()),
            RegionLabel::SaddleChainElement,
            None,
        ));
    }
    regions.push(labeled("max_0.5_0.5", point(vec![0.5, 0.5]), RegionLabel::Repeller, Some((0.1, 30.0, 0.01))));
    let mut equilibria: Vec<Vec<f64>> = Vec::new();
    for a in [0.0, 0.5, 1.0] {
        for b in [0.0, 0.5, 1.0] {
            equilibria.push(vec![a, b]);
        }
    }
    spec.metadata = KnownStructure {
        invariant_regions: regions,
        equilibria,
        expected_limit: LimitMeasure::weighted(
            minima.iter().map(|m| (LimitComponent::Point(m.to_vec()), 0.25)).collect(),
        )
        .unwrap(),
        exact_density_potential: spec.metadata.exact_density_potential.take(),
        default_start: vec![0.0, 0.0],
    };
    spec.with_equations("dX = -grad F(X) dt + eps dw, F = sum_i x_i^2 (x_i - 1)^2")
}

//! Named plans for the three benchmark problems.

use lmm_core::driver::{DomainChoice, PlanEntry};
use lmm_core::problem::ProblemSpec;

/// One row of a benchmark table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetRow {
    pub label: &'static str,
    pub energy: f64,
    pub support: &'static [&'static str],
    pub omega1: &'static str,
    pub omega2: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub problem: ProblemSpec,
    pub domain: DomainChoice,
    pub resolution: usize,
    /// Relative energy tolerance used when reporting against the table.
    pub tolerance: f64,
    pub rows: &'static [PresetRow],
}

const fn row(
    label: &'static str,
    energy: f64,
    support: &'static [&'static str],
    omega1: &'static str,
    omega2: &'static str,
) -> PresetRow {
    PresetRow {
        label,
        energy,
        support,
        omega1,
        omega2,
    }
}

const NLSE_ROWS: &[PresetRow] = &[
    row("u1", 14.7889, &[], "all", "complement"),
    row("u2", 73.8223, &["u1"], "x1>0", "complement"),
    row("u3", 73.8223, &["u1"], "x2>0", "complement"),
    row("u4", 70.9151, &["u1"], "x1+x2>0", "complement"),
    row("u5", 70.9151, &["u1"], "x1-x2>0", "complement"),
    row("u6", 210.0238, &["u1", "u2"], "|x1|>0.2", "complement"),
    row("u7", 178.2474, &["u1", "u4"], "|x1+x2|>0.3", "complement"),
    row("u8", 213.6423, &["u1", "u2", "u3"], "x1*x2>0", "complement"),
    row("u9", 243.2646, &["u1", "u4", "u5"], "|x1|>|x2|", "complement"),
    row("u10", 306.4755, &["u1", "u2", "u3", "u8"], "x1^2+x2^2>0.25", "complement"),
];

const HENON_ROWS: &[PresetRow] = &[
    row("u1", 61.9634, &[], "x1>0, x2>0", "empty"),
    row("u2", 120.7887, &["u1"], "x1<0, x2>0", "empty"),
    row("u3", 122.4078, &["u1"], "x1<0, x2<0", "empty"),
    row("u4", 126.6988, &["u1"], "x2>0", "empty"),
    row("u5", 125.3561, &["u1"], "x1>0, x2>0", "x1<0, x2<0"),
    row("u6", 177.6068, &["u1", "u2"], "x1<0, x2<0", "empty"),
    row("u7", 187.1379, &["u1", "u3"], "x2>0", "empty"),
    row("u8", 189.9406, &["u1", "u4"], "x1<0, x2<0", "empty"),
    row("u9", 230.0141, &["u1", "u2", "u6"], "x1>0, x2<0", "empty"),
    row("u10", 247.0220, &["u1", "u2", "u6"], "x2<0", "x2>0"),
    row("u11", 250.6746, &["u1", "u2", "u6"], "x1*x2>0", "x1*x2<0"),
    row("u12", 255.9728, &["u1", "u2", "u6"], "x1*x2<0", "empty"),
];

const CHANDRASEKHAR_ROWS: &[PresetRow] = &[
    row("u1", 1.6624, &[], "(x1-2)^2+x2^2<1", "empty"),
    row("u2", 18.0067, &[], "(x1+1)^2+x2^2<0.5", "empty"),
    row("u3", 108.0580, &[], "(x1-0.25)^2+x2^2<0.1", "empty"),
    row("u4", 19.6691, &["u1"], "(x1+1)^2+x2^2<0.5", "empty"),
    row("u5", 109.6897, &["u1"], "(x1-0.25)^2+x2^2<0.1", "empty"),
    row("u6", 125.8846, &["u2"], "(x1-0.25)^2+x2^2<0.1", "empty"),
    row("u7", 127.5247, &["u1", "u2"], "(x1-0.25)^2+x2^2<0.1", "empty"),
];

pub fn presets() -> Vec<Preset> {
    vec![
        Preset {
            name: "nlse-table1",
            description: "NLSE -Δu + 8|x|²u = u³ on (-1,1)², ten solutions",
            problem: ProblemSpec::Nlse { omega: 8.0 },
            domain: DomainChoice::Square,
            resolution: 129,
            tolerance: 0.02,
            rows: NLSE_ROWS,
        },
        Preset {
            name: "henon-table2",
            description: "Hénon -Δu = |x|⁶u³ on (-1,1)², twelve solutions",
            problem: ProblemSpec::Henon { ell: 6.0 },
            domain: DomainChoice::Square,
            resolution: 129,
            tolerance: 0.02,
            rows: HENON_ROWS,
        },
        Preset {
            name: "chandrasekhar-table3",
            description: "Chandrasekhar -Δu = (u²+2u)^(3/2) on the dumbbell, seven positive solutions",
            problem: ProblemSpec::Chandrasekhar,
            domain: DomainChoice::Dumbbell,
            resolution: 81,
            tolerance: 0.05,
            rows: CHANDRASEKHAR_ROWS,
        },
    ]
}

pub fn preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}

impl Preset {
    pub fn plan(&self) -> Vec<PlanEntry> {
        self.rows
            .iter()
            .map(|r| PlanEntry::new(r.label, r.support, r.omega1, r.omega2).expect("preset regions parse"))
            .collect()
    }

    pub fn expected(&self, label: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.energy)
    }
}

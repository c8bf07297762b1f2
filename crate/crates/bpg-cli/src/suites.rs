//! Named groups of acceptance criteria for `verify`.

pub const SUITES: [(&str, &[u8]); 11] = [
    ("kernels", &[3]),
    ("mappings", &[4, 5]),
    ("prox", &[6]),
    ("sarah", &[7]),
    ("deterministic", &[1, 2, 10]),
    ("census", &[8]),
    ("scaling", &[9]),
    ("stochastic", &[11]),
    ("reproducibility", &[12]),
    ("quick", &[1, 3, 4, 5, 6, 7, 12]),
    ("acceptance", &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|(n, _)| *n).chain(["all"]).collect()
}

/// Criteria of a suite; `all` is an alias of `acceptance`.
pub fn suite(name: &str) -> Option<&'static [u8]> {
    let name = if name == "all" { "acceptance" } else { name };
    SUITES.iter().find(|(n, _)| *n == name).map(|(_, ids)| *ids)
}

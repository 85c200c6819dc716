// Published automatic and human evaluation results, used as rendering
// fixtures. `true` marks a value reported as significant.

pub const AUTOMATIC_COLUMNS: [&str; 5] = ["BLEU-4", "ROUGE-L", "METEOR", "ChRF", "BERTScore"];

pub const AUTOMATIC: [(&str, [(f64, bool); 5]); 7] = [
    (
        "T5-large (Baseline)",
        [
            (21.59, false),
            (53.90, false),
            (32.20, false),
            (57.03, false),
            (71.80, false),
        ],
    ),
    (
        "BART-large (Baseline)",
        [
            (20.05, false),
            (51.60, false),
            (31.90, false),
            (54.96, false),
            (74.20, false),
        ],
    ),
    (
        "ICL (k=3)",
        [
            (22.65, false),
            (54.24, false),
            (32.98, false),
            (58.47, false),
            (74.93, false),
        ],
    ),
    (
        "ICL (k=5)",
        [
            (22.87, false),
            (54.84, false),
            (33.58, false),
            (59.42, true),
            (75.60, true),
        ],
    ),
    (
        "ICL (k=7)",
        [
            (22.69, false),
            (55.95, true),
            (34.62, false),
            (60.48, true),
            (75.92, true),
        ],
    ),
    (
        "RAG (k=5)",
        [
            (20.76, false),
            (52.60, false),
            (32.07, false),
            (56.93, false),
            (70.20, false),
        ],
    ),
    (
        "Hybrid Model (k=5, m=5)",
        [
            (21.45, false),
            (53.79, false),
            (33.69, false),
            (57.78, false),
            (71.45, false),
        ],
    ),
];

pub const HUMAN_COLUMNS: [&str; 5] = ["Gramm", "Appr", "Rel", "Comp", "Answ"];

pub const HUMAN: [(&str, [(f64, bool); 5]); 7] = [
    (
        "T5-large (Baseline)",
        [
            (4.65, false),
            (4.45, false),
            (3.92, false),
            (3.57, false),
            (3.21, false),
        ],
    ),
    (
        "BART-large (Baseline)",
        [
            (3.81, false),
            (3.98, false),
            (3.60, false),
            (3.60, false),
            (3.15, false),
        ],
    ),
    (
        "ICL (k=3)",
        [(4.67, true), (4.50, true), (3.97, true), (3.65, false), (3.20, false)],
    ),
    (
        "ICL (k=5)",
        [(4.72, true), (4.56, true), (4.03, true), (3.78, false), (3.24, false)],
    ),
    (
        "ICL (k=7)",
        [(4.76, true), (4.62, true), (4.08, true), (3.84, false), (3.31, false)],
    ),
    (
        "RAG (k=5)",
        [
            (3.90, false),
            (4.10, false),
            (3.70, false),
            (3.74, false),
            (2.90, false),
        ],
    ),
    (
        "Hybrid Model (k=5, m=5)",
        [(4.84, true), (4.74, true), (4.25, true), (4.02, true), (3.20, false)],
    ),
];

pub const KAPPA: [(&str, f64); 5] = [
    ("Gramm", 0.51),
    ("Appr", 0.48),
    ("Rel", 0.45),
    ("Comp", 0.45),
    ("Answ", 0.49),
];

pub const SAMPLE_CONTEXT: &str = "Purchasing power parity (PPP) is an economic indicator that signifies the purchasing power of the currencies of various nations of the world against each other. It helps in comparing living standards between different countries and estimating economic productivity.";

pub const SAMPLE_GOLD: &str = "What does purchasing power parity do?";

pub const SAMPLE_QUESTIONS: [(&str, &str); 7] = [
    ("T5-large (Baseline)", "What is the importance of a country\u{2019}s development index? How does it help the poor?"),
    ("BART-large (Baseline)", "What is the importance of ease of living standards in simple words, and why is it important?"),
    ("ICL (k=3)", "What is the function of purchasing power parity (PPP) in comparing currencies?"),
    ("ICL (k=5)", "How does purchasing power parity (PPP) help in comparing living standards between countries?"),
    ("ICL (k=7)", "What role does purchasing power parity (PPP) play in comparing economic productivity between different countries?"),
    ("RAG (k=5)", "What is the purpose of purchasing power parity (PPP) in assessing economic productivity?"),
    ("Hybrid Model (k=5, m=5)", "How does purchasing power parity (PPP) assist in comparing living standards and currencies across nations?"),
];

use std::collections::{BTreeMap, BTreeSet};

pub type TableInput = (
    Vec<String>,
    Vec<(String, BTreeMap<String, f64>)>,
    BTreeSet<(String, String)>,
);

pub fn table_input(columns: &[&str], rows: &[(&str, [(f64, bool); 5])]) -> TableInput {
    let cols: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
    let mut stars = BTreeSet::new();
    let rows = rows
        .iter()
        .map(|(model, vals)| {
            let mut m = BTreeMap::new();
            for (c, (v, star)) in cols.iter().zip(vals) {
                m.insert(c.clone(), *v);
                if *star {
                    stars.insert((model.to_string(), c.clone()));
                }
            }
            (model.to_string(), m)
        })
        .collect();
    (cols, rows, stars)
}

//! Reference answer tables, transcribed cell by cell. Each θ row lists the
//! bits asked from S1, S2, S3 in order.

#![allow(dead_code)]

use graph_pir::tables::{parse_form, AnswerTable};
use graph_pir::verify::joint_pattern;
use graph_pir::LinearForm;

pub struct Reference {
    pub label: &'static str,
    pub servers: [&'static [&'static str]; 3],
}

pub const PATH3: &[Reference] = &[
    Reference { label: "(1,2)", servers: [&["a_1"], &["a_2+b_2"], &["b_2"]] },
    Reference { label: "(2,3)", servers: [&["a_1"], &["a_1+b_1"], &["b_2"]] },
];

pub const COMPLETE3: &[Reference] = &[
    Reference {
        label: "(1,2)",
        servers: [
            &["a_1", "b_6", "a_2+b_2", "a_5+b_5"],
            &["a_3", "c_5", "a_4+c_4", "a_6+c_6"],
            &["b_2", "c_4", "b_5+c_5", "b_6+c_6"],
        ],
    },
    Reference {
        label: "(1,3)",
        servers: [
            &["a_6", "b_1", "a_2+b_2", "a_5+b_5"],
            &["a_2", "c_4", "a_5+c_5", "a_6+c_6"],
            &["b_3", "c_5", "b_4+c_4", "b_6+c_6"],
        ],
    },
    Reference {
        label: "(2,3)",
        servers: [
            &["a_2", "b_4", "a_5+b_5", "a_6+b_6"],
            &["a_6", "c_1", "a_2+c_2", "a_5+c_5"],
            &["b_5", "c_3", "b_4+c_4", "b_6+c_6"],
        ],
    },
];

pub const MULTIPATH3: &[Reference] = &[
    Reference {
        label: "(1,1)",
        servers: [
            &["a_1", "a'_1", "a_4+a'_2"],
            &["a_2+b_2", "a'_2+b'_2", "a_3+a'_1+b_4+b'_4"],
            &["b_2", "b'_2", "b_4+b'_4"],
        ],
    },
    Reference {
        label: "(1,2)",
        servers: [
            &["a_1", "a'_1", "a_2+a'_4"],
            &["a_2+b_2", "a'_2+b'_2", "a_1+a'_3+b_4+b'_4"],
            &["b_2", "b'_2", "b_4+b'_4"],
        ],
    },
    Reference {
        label: "(2,1)",
        servers: [
            &["a_1", "a'_1", "a_2+a'_2"],
            &["a_1+b_1", "a'_1+b'_1", "a_2+a'_2+b_4+b'_2"],
            &["b_2", "b'_2", "b_3+b'_1"],
        ],
    },
    Reference {
        label: "(2,2)",
        servers: [
            &["a_1", "a'_1", "a_2+a'_2"],
            &["a_1+b_1", "a'_1+b'_1", "a_2+a'_2+b_2+b'_4"],
            &["b_2", "b'_2", "b_1+b'_3"],
        ],
    },
];

impl Reference {
    pub fn forms(&self) -> Vec<Vec<LinearForm>> {
        self.servers.iter().map(|col| col.iter().map(|c| parse_form(c).unwrap()).collect()).collect()
    }
}

/// Rows whose cells coincide exactly, and rows that only agree up to one
/// index renaming per file; panics naming the first row that agrees in
/// neither sense.
pub fn compare(ours: &AnswerTable, reference: &[Reference]) -> (Vec<&'static str>, Vec<&'static str>) {
    assert_eq!(ours.rows.len(), reference.len(), "row count");
    let (mut exact, mut renamed) = (Vec::new(), Vec::new());
    for (row, want) in ours.rows.iter().zip(reference) {
        assert_eq!(row.label, want.label);
        let label = want.label;
        let want = want.forms();
        if row.servers == want {
            exact.push(label);
            continue;
        }
        let a: Vec<&[LinearForm]> = row.servers.iter().map(Vec::as_slice).collect();
        let b: Vec<&[LinearForm]> = want.iter().map(Vec::as_slice).collect();
        assert_eq!(joint_pattern(&a), joint_pattern(&b), "row {} differs beyond renaming", row.label);
        renamed.push(label);
    }
    (exact, renamed)
}

//! CPLEX LP files for the quadratic and the linearised boolean programs.
//!
//! Variables are named after node labels: `x_i` for a node and `x_i_j` for
//! the product variable of coupler `(i, j)`. The constant offset cannot be
//! expressed in the objective, so it is written as a leading comment.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ising::BoolModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpForm {
    /// Product terms replaced by `x_i_j` with three linking constraints each.
    Ilp,
    /// Quadratic objective, no constraints.
    Iqp,
}

impl FromStr for LpForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ilp" => Ok(LpForm::Ilp),
            "iqp" => Ok(LpForm::Iqp),
            _ => Err(Error::InvalidArgument(format!(
                "unknown export form `{s}` (expected ilp or iqp)"
            ))),
        }
    }
}

const TERMS_PER_LINE: usize = 8;

struct Objective {
    text: String,
    terms: usize,
}

impl Objective {
    fn new() -> Self {
        Objective {
            text: String::from(" obj:"),
            terms: 0,
        }
    }

    fn push(&mut self, coeff: f64, var: &str) {
        if coeff == 0.0 {
            return;
        }
        if self.terms > 0 && self.terms.is_multiple_of(TERMS_PER_LINE) {
            self.text.push_str("\n     ");
        }
        let sign = if coeff < 0.0 { '-' } else { '+' };
        if self.terms == 0 && sign == '+' {
            let _ = write!(self.text, " {} {var}", coeff);
        } else if self.terms == 0 {
            let _ = write!(self.text, " - {} {var}", -coeff);
        } else {
            let _ = write!(self.text, " {sign} {} {var}", coeff.abs());
        }
        self.terms += 1;
    }
}

fn names(model: &BoolModel) -> (Vec<String>, Vec<String>) {
    let labels = model.labels();
    let nodes = labels.iter().map(|l| format!("x_{l}")).collect();
    let pairs = model
        .quadratic()
        .iter()
        .map(|e| format!("x_{}_{}", labels[e.i], labels[e.j]))
        .collect();
    (nodes, pairs)
}

fn header(model: &BoolModel, form: &str) -> String {
    format!(
        "\\ {form} form of a {}-variable boolean quadratic program\n\\ offset: {}\nMinimize\n",
        model.node_count(),
        model.offset()
    )
}

pub fn ilp_string(model: &BoolModel) -> String {
    let (nodes, pairs) = names(model);
    let mut out = header(model, "ILP");
    let mut obj = Objective::new();
    for (c, name) in model.linear().iter().zip(&nodes) {
        obj.push(*c, name);
    }
    for (e, name) in model.quadratic().iter().zip(&pairs) {
        obj.push(e.coupling, name);
    }
    if obj.terms == 0 {
        obj.text.push_str(" 0");
    }
    out.push_str(&obj.text);
    out.push_str("\nSubject To\n");
    for (e, name) in model.quadratic().iter().zip(&pairs) {
        let (a, b) = (&nodes[e.i], &nodes[e.j]);
        let _ = writeln!(out, " {name}_ge: {name} - {a} - {b} >= -1");
        let _ = writeln!(out, " {name}_le_i: {name} - {a} <= 0");
        let _ = writeln!(out, " {name}_le_j: {name} - {b} <= 0");
    }
    out.push_str("Binary\n");
    for name in nodes.iter().chain(&pairs) {
        let _ = writeln!(out, " {name}");
    }
    out.push_str("End\n");
    out
}

pub fn iqp_string(model: &BoolModel) -> String {
    let (nodes, _) = names(model);
    let mut out = header(model, "IQP");
    let mut obj = Objective::new();
    for (c, name) in model.linear().iter().zip(&nodes) {
        obj.push(*c, name);
    }
    let quad: Vec<_> = model.quadratic().iter().filter(|e| e.coupling != 0.0).collect();
    if !quad.is_empty() {
        let mut q = String::new();
        for (k, e) in quad.iter().enumerate() {
            if k > 0 && k % TERMS_PER_LINE == 0 {
                q.push_str("\n     ");
            }
            let c = 2.0 * e.coupling;
            let sign = if c < 0.0 { "-" } else { "+" };
            if k == 0 && c >= 0.0 {
                let _ = write!(q, " {} {} * {}", c, nodes[e.i], nodes[e.j]);
            } else {
                let _ = write!(q, " {sign} {} {} * {}", c.abs(), nodes[e.i], nodes[e.j]);
            }
        }
        let _ = write!(obj.text, " + [{q} ] / 2");
        obj.terms += 1;
    }
    if obj.terms == 0 {
        obj.text.push_str(" 0");
    }
    out.push_str(&obj.text);
    out.push_str("\nSubject To\nBinary\n");
    for name in &nodes {
        let _ = writeln!(out, " {name}");
    }
    out.push_str("End\n");
    out
}

pub fn lp_string(model: &BoolModel, form: LpForm) -> String {
    match form {
        LpForm::Ilp => ilp_string(model),
        LpForm::Iqp => iqp_string(model),
    }
}

pub fn export(model: &BoolModel, form: LpForm, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, lp_string(model, form)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> BoolModel {
        BoolModel::new(2, [(0, 1, -4.0)], vec![2.0, 2.0], -1.0).unwrap()
    }

    #[test]
    fn ilp_single_edge() {
        let text = ilp_string(&pair());
        assert!(text.contains("\\ offset: -1\n"));
        assert!(text.contains(" obj: 2 x_0 + 2 x_1 - 4 x_0_1\n"));
        let constraints = text
            .lines()
            .skip_while(|l| *l != "Subject To")
            .skip(1)
            .take_while(|l| *l != "Binary")
            .count();
        assert_eq!(constraints, 3);
        let binaries = text.lines().skip_while(|l| *l != "Binary").skip(1).take_while(|l| *l != "End").count();
        assert_eq!(binaries, 3);
    }

    #[test]
    fn iqp_single_edge() {
        let text = iqp_string(&pair());
        assert!(text.contains(" obj: 2 x_0 + 2 x_1 + [ - 8 x_0 * x_1 ] / 2\n"));
        assert!(text.contains("Subject To\nBinary\n x_0\n x_1\nEnd\n"));
    }

    #[test]
    fn zero_coupler_keeps_constraints_only() {
        let m = BoolModel::new(2, [(0, 1, 0.0)], vec![1.0, 0.0], 0.0).unwrap();
        let text = ilp_string(&m);
        assert!(text.contains(" obj: 1 x_0\n"));
        assert!(text.contains("x_0_1_ge: x_0_1 - x_0 - x_1 >= -1"));
        assert!(iqp_string(&m).contains(" obj: 1 x_0\n"));
    }

    #[test]
    fn form_names() {
        assert_eq!("ILP".parse::<LpForm>().unwrap(), LpForm::Ilp);
        assert_eq!("iqp".parse::<LpForm>().unwrap(), LpForm::Iqp);
        assert!("mps".parse::<LpForm>().is_err());
    }
}

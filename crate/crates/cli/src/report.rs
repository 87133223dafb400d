//! Machine-readable run reports.
//!
//! Reports are deterministic byte-for-byte across runs: the fixed
//! summation orders downstream make every numeric reproducible, and the
//! timing field stays null unless explicitly requested.

use serde::Serialize;
use serde_json::Value;

#[derive(Serialize)]
pub struct OutputValue {
    pub name: String,
    pub value: Value,
    pub errbound: f64,
}

#[derive(Serialize)]
pub struct ComparisonLine {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub absdiff: f64,
    pub reldiff: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Serialize, Default)]
pub struct Counters {
    pub terms: u64,
    pub nodes: u64,
}

#[derive(Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub outputs: Vec<OutputValue>,
    pub comparisons: Vec<ComparisonLine>,
    pub timing: Option<f64>,
    pub counters: Counters,
    pub version: String,
}

impl Report {
    pub fn new(command: &str, inputs: Value) -> Report {
        Report {
            command: command.to_string(),
            inputs,
            outputs: Vec::new(),
            comparisons: Vec::new(),
            timing: None,
            counters: Counters::default(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn push_real(&mut self, name: &str, value: f64, errbound: f64) {
        self.outputs.push(OutputValue {
            name: name.to_string(),
            value: serde_json::json!(value),
            errbound,
        });
    }

    pub fn push_complex(&mut self, name: &str, value: num_complex::Complex64, errbound: f64) {
        self.outputs.push(OutputValue {
            name: name.to_string(),
            value: serde_json::json!([value.re, value.im]),
            errbound,
        });
    }

    pub fn push_value(&mut self, name: &str, value: Value, errbound: f64) {
        self.outputs.push(OutputValue {
            name: name.to_string(),
            value,
            errbound,
        });
    }

    /// pass = absdiff <= tol + combined error bounds.
    pub fn compare(&mut self, label: &str, lhs: f64, rhs: f64, tol: f64, errbounds: f64) -> bool {
        let absdiff = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        let pass = absdiff <= tol + errbounds;
        self.comparisons.push(ComparisonLine {
            label: label.to_string(),
            lhs,
            rhs,
            absdiff,
            reldiff: absdiff / scale,
            tol,
            pass,
        });
        pass
    }

    pub fn all_pass(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass)
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} (v{})\n", self.command, self.version));
        out.push_str(&format!("inputs: {}\n", self.inputs));
        for o in &self.outputs {
            out.push_str(&format!(
                "  {:<24} {}  (errbound {:.3e})\n",
                o.name, o.value, o.errbound
            ));
        }
        for c in &self.comparisons {
            out.push_str(&format!(
                "  {:<40} |diff| = {:.3e}  tol = {:.1e}  [{}]\n",
                c.label,
                c.absdiff,
                c.tol,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "work: {} series terms, {} quadrature nodes\n",
            self.counters.terms, self.counters.nodes
        ));
        if let Some(t) = self.timing {
            out.push_str(&format!("timing: {t:.3}s\n"));
        }
        out
    }
}

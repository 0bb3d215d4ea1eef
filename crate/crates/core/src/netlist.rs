//! Linear small-signal circuit description.
//!
//! A [`Netlist`] is an ordered list of named elements over named nodes. Node
//! index 0 is always ground, spelled `0` or `gnd` in text.
//!
//! Text format, one element per line (`*` or `#` starts a comment line):
//!
//! ```text
//! .title  tank
//! R<id> n1 n2 value [noiseless]
//! C<id> n1 n2 value
//! L<id> n1 n2 value
//! K<id> L<a> L<b> k
//! G<id> outp outn ctrlp ctrln gm [gamma=<x>] [noiseless]
//! V<id> n1 n2 mag [phase_deg]
//! I<id> n1 n2 mag [phase_deg]
//! ```
//!
//! Values accept the suffixes `a f p n u m k meg M g t` (`m` is milli, `M`
//! and `meg` are mega).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::ParseError;

/// Dense node index. Index 0 is ground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const GROUND: NodeId = NodeId(0);

    pub fn is_ground(self) -> bool {
        self.0 == 0
    }
}

fn is_ground_name(name: &str) -> bool {
    name == "0" || name.eq_ignore_ascii_case("gnd")
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Resistor {
        n1: NodeId,
        n2: NodeId,
        ohms: f64,
        noisy: bool,
    },
    Capacitor {
        n1: NodeId,
        n2: NodeId,
        farads: f64,
    },
    Inductor {
        n1: NodeId,
        n2: NodeId,
        henries: f64,
    },
    /// Mutual coupling between two inductors, referenced by element name.
    MutualCoupling { la: String, lb: String, k: f64 },
    /// Current `gm * (V(ctrl_p) - V(ctrl_n))` flows from `out_p` through the
    /// source to `out_n`.
    Vccs {
        out_p: NodeId,
        out_n: NodeId,
        ctrl_p: NodeId,
        ctrl_n: NodeId,
        gm: f64,
        noisy: bool,
        gamma: f64,
    },
    VSource {
        n1: NodeId,
        n2: NodeId,
        magnitude: f64,
        phase_deg: f64,
    },
    /// Current flows from `n1` through the source to `n2`.
    ISource {
        n1: NodeId,
        n2: NodeId,
        magnitude: f64,
        phase_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
}

impl Element {
    /// The two terminals that carry the element's own branch current, if any.
    pub fn terminals(&self) -> Option<(NodeId, NodeId)> {
        match self.kind {
            ElementKind::Resistor { n1, n2, .. }
            | ElementKind::Capacitor { n1, n2, .. }
            | ElementKind::Inductor { n1, n2, .. }
            | ElementKind::VSource { n1, n2, .. }
            | ElementKind::ISource { n1, n2, .. } => Some((n1, n2)),
            ElementKind::Vccs { out_p, out_n, .. } => Some((out_p, out_n)),
            ElementKind::MutualCoupling { .. } => None,
        }
    }

    /// Every node the element touches, control terminals included.
    pub fn all_nodes(&self) -> Vec<NodeId> {
        match self.kind {
            ElementKind::Vccs {
                out_p,
                out_n,
                ctrl_p,
                ctrl_n,
                ..
            } => vec![out_p, out_n, ctrl_p, ctrl_n],
            _ => self
                .terminals()
                .map(|(a, b)| vec![a, b])
                .unwrap_or_default(),
        }
    }

    pub fn is_independent_source(&self) -> bool {
        matches!(
            self.kind,
            ElementKind::VSource { .. } | ElementKind::ISource { .. }
        )
    }

    pub fn is_noisy(&self) -> bool {
        match self.kind {
            ElementKind::Resistor { noisy, .. } | ElementKind::Vccs { noisy, .. } => noisy,
            _ => false,
        }
    }
}

pub(crate) fn polar_deg(magnitude: f64, phase_deg: f64) -> Complex64 {
    Complex64::from_polar(magnitude, phase_deg.to_radians())
}

/// Ordered element list over a node table.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub title: String,
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    elements: Vec<Element>,
}

impl Default for Netlist {
    fn default() -> Self {
        Self::new("")
    }
}

impl Netlist {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            nodes: vec!["0".to_string()],
            index: HashMap::new(),
            elements: Vec::new(),
        }
    }

    /// Look up a node, creating it if needed.
    pub fn node(&mut self, name: &str) -> NodeId {
        if is_ground_name(name) {
            return NodeId::GROUND;
        }
        if let Some(&i) = self.index.get(name) {
            return NodeId(i);
        }
        let id = self.nodes.len();
        self.nodes.push(name.to_string());
        self.index.insert(name.to_string(), id);
        NodeId(id)
    }

    pub fn find_node(&self, name: &str) -> Option<NodeId> {
        if is_ground_name(name) {
            return Some(NodeId::GROUND);
        }
        self.index.get(name).map(|&i| NodeId(i))
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id.0]
    }

    /// Number of nodes including ground.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn elements_mut(&mut self) -> &mut [Element] {
        &mut self.elements
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn element_index(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.name == name)
    }

    pub fn push(&mut self, element: Element) -> &mut Self {
        self.elements.push(element);
        self
    }

    pub fn remove(&mut self, name: &str) -> Option<Element> {
        let i = self.element_index(name)?;
        Some(self.elements.remove(i))
    }

    pub fn resistor(&mut self, name: &str, a: &str, b: &str, ohms: f64) -> &mut Self {
        self.resistor_with_noise(name, a, b, ohms, true)
    }

    pub fn resistor_with_noise(
        &mut self,
        name: &str,
        a: &str,
        b: &str,
        ohms: f64,
        noisy: bool,
    ) -> &mut Self {
        let (n1, n2) = (self.node(a), self.node(b));
        self.push(Element {
            name: name.to_string(),
            kind: ElementKind::Resistor {
                n1,
                n2,
                ohms,
                noisy,
            },
        })
    }

    pub fn capacitor(&mut self, name: &str, a: &str, b: &str, farads: f64) -> &mut Self {
        let (n1, n2) = (self.node(a), self.node(b));
        self.push(Element {
            name: name.to_string(),
            kind: ElementKind::Capacitor { n1, n2, farads },
        })
    }

    pub fn inductor(&mut self, name: &str, a: &str, b: &str, henries: f64) -> &mut Self {
        let (n1, n2) = (self.node(a), self.node(b));
        self.push(Element {
            name: name.to_string(),
            kind: ElementKind::Inductor { n1, n2, henries },
        })
    }

    pub fn coupling(&mut self, name: &str, la: &str, lb: &str, k: f64) -> &mut Self {
        self.push(Element {
            name: name.to_string(),
            kind: ElementKind::MutualCoupling {
                la: la.to_string(),
                lb: lb.to_string(),
                k,
            },
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn vccs(
        &mut self,
        name: &str,
        out_p: &str,
        out_n: &str,
        ctrl_p: &str,
        ctrl_n: &str,
        gm: f64,
        noisy: bool,
        gamma: f64,
    ) -> &mut Self {
        let kind = ElementKind::Vccs {
            out_p: self.node(out_p),
            out_n: self.node(out_n),
            ctrl_p: self.node(ctrl_p),
            ctrl_n: self.node(ctrl_n),
            gm,
            noisy,
            gamma,
        };
        self.push(Element {
            name: name.to_string(),
            kind,
        })
    }

    pub fn vsource(&mut self, name: &str, a: &str, b: &str, magnitude: f64) -> &mut Self {
        let (n1, n2) = (self.node(a), self.node(b));
        self.push(Element {
            name: name.to_string(),
            kind: ElementKind::VSource {
                n1,
                n2,
                magnitude,
                phase_deg: 0.0,
            },
        })
    }

    pub fn isource(&mut self, name: &str, a: &str, b: &str, magnitude: f64) -> &mut Self {
        let (n1, n2) = (self.node(a), self.node(b));
        self.push(Element {
            name: name.to_string(),
            kind: ElementKind::ISource {
                n1,
                n2,
                magnitude,
                phase_deg: 0.0,
            },
        })
    }

    /// Render in the line format accepted by [`parse_netlist`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, ".title {}", self.title);
        }
        let n = |id: NodeId| self.node_name(id);
        for e in &self.elements {
            let _ = match &e.kind {
                ElementKind::Resistor {
                    n1,
                    n2,
                    ohms,
                    noisy,
                } => writeln!(
                    out,
                    "{} {} {} {:e}{}",
                    e.name,
                    n(*n1),
                    n(*n2),
                    ohms,
                    if *noisy { "" } else { " noiseless" }
                ),
                ElementKind::Capacitor { n1, n2, farads } => {
                    writeln!(out, "{} {} {} {:e}", e.name, n(*n1), n(*n2), farads)
                }
                ElementKind::Inductor { n1, n2, henries } => {
                    writeln!(out, "{} {} {} {:e}", e.name, n(*n1), n(*n2), henries)
                }
                ElementKind::MutualCoupling { la, lb, k } => {
                    writeln!(out, "{} {} {} {:e}", e.name, la, lb, k)
                }
                ElementKind::Vccs {
                    out_p,
                    out_n,
                    ctrl_p,
                    ctrl_n,
                    gm,
                    noisy,
                    gamma,
                } => writeln!(
                    out,
                    "{} {} {} {} {} {:e} gamma={:e}{}",
                    e.name,
                    n(*out_p),
                    n(*out_n),
                    n(*ctrl_p),
                    n(*ctrl_n),
                    gm,
                    gamma,
                    if *noisy { "" } else { " noiseless" }
                ),
                ElementKind::VSource {
                    n1,
                    n2,
                    magnitude,
                    phase_deg,
                }
                | ElementKind::ISource {
                    n1,
                    n2,
                    magnitude,
                    phase_deg,
                } => writeln!(
                    out,
                    "{} {} {} {:e} {:e}",
                    e.name,
                    n(*n1),
                    n(*n2),
                    magnitude,
                    phase_deg
                ),
            };
        }
        out
    }
}

impl FromStr for Netlist {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_netlist(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ValueError {
    Malformed,
    UnknownSuffix,
}

/// Parse a number with an optional engineering suffix.
pub(crate) fn parse_value(token: &str) -> Result<f64, ValueError> {
    if let Ok(v) = token.parse::<f64>() {
        return Ok(v);
    }
    // Longest numeric prefix wins so that `1e-3` is never read as `1` + `e-3`.
    let split = (1..token.len())
        .rev()
        .filter(|&i| token.is_char_boundary(i))
        .find(|&i| token[..i].parse::<f64>().is_ok())
        .ok_or(ValueError::Malformed)?;
    let number: f64 = token[..split].parse().map_err(|_| ValueError::Malformed)?;
    let scale = match &token[split..] {
        s if s.eq_ignore_ascii_case("meg") => 1e6,
        "M" => 1e6,
        "m" => 1e-3,
        s => match s.to_ascii_lowercase().as_str() {
            "a" => 1e-18,
            "f" => 1e-15,
            "p" => 1e-12,
            "n" => 1e-9,
            "u" => 1e-6,
            "k" => 1e3,
            "g" => 1e9,
            "t" => 1e12,
            _ => return Err(ValueError::UnknownSuffix),
        },
    };
    Ok(number * scale)
}

/// Parse the line-based netlist text format.
pub fn parse_netlist(text: &str) -> Result<Netlist, ParseError> {
    let mut net = Netlist::new("");
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') || line.starts_with('#') {
            continue;
        }
        let syntax = |message: String| ParseError::Syntax {
            line: line_no,
            message,
        };

        if let Some(directive) = line.strip_prefix('.') {
            let (word, rest) = directive
                .split_once(char::is_whitespace)
                .unwrap_or((directive, ""));
            match word.to_ascii_lowercase().as_str() {
                "title" => net.title = rest.trim().to_string(),
                "end" => break,
                other => return Err(syntax(format!("unknown directive `.{other}`"))),
            }
            continue;
        }

        let tokens: Vec<&str> = line.split_whitespace().collect();
        let name = tokens[0];
        if seen.contains_key(name) {
            return Err(ParseError::Duplicate {
                line: line_no,
                name: name.to_string(),
            });
        }

        let value = |token: &str| -> Result<f64, ParseError> {
            match parse_value(token) {
                Ok(v) => Ok(v),
                Err(ValueError::UnknownSuffix) => Err(ParseError::UnknownSuffix {
                    line: line_no,
                    token: token.to_string(),
                }),
                Err(ValueError::Malformed) => Err(ParseError::Syntax {
                    line: line_no,
                    message: format!("malformed number `{token}`"),
                }),
            }
        };
        let positive = |token: &str| -> Result<f64, ParseError> {
            let v = value(token)?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(ParseError::NonPositive {
                    line: line_no,
                    element: name.to_string(),
                    value: v,
                })
            }
        };
        let arity = |min: usize, max: usize| -> Result<(), ParseError> {
            if tokens.len() < min || tokens.len() > max {
                Err(ParseError::Syntax {
                    line: line_no,
                    message: format!(
                        "`{name}` expects {} to {} fields, found {}",
                        min - 1,
                        max - 1,
                        tokens.len() - 1
                    ),
                })
            } else {
                Ok(())
            }
        };

        let first = name
            .chars()
            .next()
            .map(|c| c.to_ascii_uppercase())
            .unwrap_or(' ');
        match first {
            'R' => {
                arity(4, 5)?;
                let ohms = positive(tokens[3])?;
                let noisy = match tokens.get(4) {
                    None => true,
                    Some(flag) if flag.eq_ignore_ascii_case("noiseless") => false,
                    Some(flag) => return Err(syntax(format!("unexpected field `{flag}`"))),
                };
                net.resistor_with_noise(name, tokens[1], tokens[2], ohms, noisy);
            }
            'C' => {
                arity(4, 4)?;
                let farads = positive(tokens[3])?;
                net.capacitor(name, tokens[1], tokens[2], farads);
            }
            'L' => {
                arity(4, 4)?;
                let henries = positive(tokens[3])?;
                net.inductor(name, tokens[1], tokens[2], henries);
            }
            'K' => {
                arity(4, 4)?;
                let k = value(tokens[3])?;
                net.coupling(name, tokens[1], tokens[2], k);
            }
            'G' => {
                arity(6, 8)?;
                let gm = value(tokens[5])?;
                let mut gamma = 1.0;
                let mut noisy = true;
                for extra in &tokens[6..] {
                    if extra.eq_ignore_ascii_case("noiseless") {
                        noisy = false;
                    } else if let Some(v) = extra
                        .strip_prefix("gamma=")
                        .or_else(|| extra.strip_prefix("GAMMA="))
                    {
                        gamma = value(v)?;
                    } else {
                        return Err(syntax(format!("unexpected field `{extra}`")));
                    }
                }
                net.vccs(
                    name, tokens[1], tokens[2], tokens[3], tokens[4], gm, noisy, gamma,
                );
            }
            'V' | 'I' => {
                arity(4, 5)?;
                let magnitude = value(tokens[3])?;
                let phase_deg = match tokens.get(4) {
                    Some(t) => value(t)?,
                    None => 0.0,
                };
                let (n1, n2) = (net.node(tokens[1]), net.node(tokens[2]));
                let kind = if first == 'V' {
                    ElementKind::VSource {
                        n1,
                        n2,
                        magnitude,
                        phase_deg,
                    }
                } else {
                    ElementKind::ISource {
                        n1,
                        n2,
                        magnitude,
                        phase_deg,
                    }
                };
                net.push(Element {
                    name: name.to_string(),
                    kind,
                });
            }
            _ => return Err(syntax(format!("unknown element type `{name}`"))),
        }
        seen.insert(name.to_string(), line_no);
    }
    Ok(net)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    Empty,
    NonFinite,
    NonPositive,
    CouplingOutOfRange,
    MissingInductor { name: String },
    SelfCoupling,
    DuplicateName,
    /// Node with no conductive path to ground, or touched by a single terminal.
    Floating { node: String },
}

/// One broken netlist invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Offending element index, when one can be named.
    pub element: Option<usize>,
    #[serde(flatten)]
    pub kind: ViolationKind,
    pub reason: String,
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// Report every invariant violation; an empty list means the netlist is valid.
pub fn validate_netlist(net: &Netlist) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |element: Option<usize>, kind: ViolationKind, reason: String| {
        out.push(Violation {
            element,
            kind,
            reason,
        })
    };

    if net.elements.is_empty() {
        push(None, ViolationKind::Empty, "netlist has no elements".into());
        return out;
    }

    let mut names: HashMap<&str, usize> = HashMap::new();
    for (i, e) in net.elements.iter().enumerate() {
        if let Some(first) = names.insert(e.name.as_str(), i) {
            names.insert(e.name.as_str(), first);
            push(
                Some(i),
                ViolationKind::DuplicateName,
                format!("`{}` already defined by element {first}", e.name),
            );
        }
    }
    let inductor = |name: &str| {
        net.elements
            .iter()
            .any(|e| e.name == name && matches!(e.kind, ElementKind::Inductor { .. }))
    };

    for (i, e) in net.elements.iter().enumerate() {
        let values: Vec<(&str, f64, bool)> = match &e.kind {
            ElementKind::Resistor { ohms, .. } => vec![("resistance", *ohms, true)],
            ElementKind::Capacitor { farads, .. } => vec![("capacitance", *farads, true)],
            ElementKind::Inductor { henries, .. } => vec![("inductance", *henries, true)],
            ElementKind::MutualCoupling { k, .. } => vec![("coupling", *k, false)],
            ElementKind::Vccs { gm, gamma, .. } => {
                vec![("transconductance", *gm, false), ("gamma", *gamma, false)]
            }
            ElementKind::VSource {
                magnitude,
                phase_deg,
                ..
            }
            | ElementKind::ISource {
                magnitude,
                phase_deg,
                ..
            } => vec![("magnitude", *magnitude, false), ("phase", *phase_deg, false)],
        };
        for (what, v, must_be_positive) in values {
            if !v.is_finite() {
                push(
                    Some(i),
                    ViolationKind::NonFinite,
                    format!("`{}` {what} is not finite", e.name),
                );
            } else if must_be_positive && v <= 0.0 {
                push(
                    Some(i),
                    ViolationKind::NonPositive,
                    format!("`{}` {what} must be positive, got {v}", e.name),
                );
            }
        }
        if let ElementKind::Vccs { gamma, .. } = e.kind {
            if gamma.is_finite() && gamma < 0.0 {
                push(
                    Some(i),
                    ViolationKind::NonPositive,
                    format!("`{}` gamma must be non-negative", e.name),
                );
            }
        }
        if let ElementKind::MutualCoupling { la, lb, k } = &e.kind {
            if k.is_finite() && !(0.0..=1.0).contains(k) {
                push(
                    Some(i),
                    ViolationKind::CouplingOutOfRange,
                    format!("`{}` k = {k} outside [0, 1]", e.name),
                );
            }
            for l in [la, lb] {
                if !inductor(l) {
                    push(
                        Some(i),
                        ViolationKind::MissingInductor { name: l.clone() },
                        format!("`{}` references missing inductor `{l}`", e.name),
                    );
                }
            }
            if la == lb {
                push(
                    Some(i),
                    ViolationKind::SelfCoupling,
                    format!("`{}` couples `{la}` to itself", e.name),
                );
            }
        }
    }

    // Connectivity: only R, C, L and V sources tie node voltages together. A
    // node touching a single terminal is dangling unless that element goes to ground.
    let n = net.node_count();
    let mut sets = DisjointSet::new(n);
    let mut degree = vec![0usize; n];
    let mut first_touch: Vec<Option<usize>> = vec![None; n];
    for (i, e) in net.elements.iter().enumerate() {
        for node in e.all_nodes() {
            degree[node.0] += 1;
            first_touch[node.0].get_or_insert(i);
        }
        match e.kind {
            ElementKind::Resistor { n1, n2, .. }
            | ElementKind::Capacitor { n1, n2, .. }
            | ElementKind::Inductor { n1, n2, .. }
            | ElementKind::VSource { n1, n2, .. } => sets.union(n1.0, n2.0),
            _ => {}
        }
    }
    let ground = sets.find(0);
    for node in 1..n {
        let name = net.nodes[node].clone();
        if degree[node] == 0 {
            continue;
        }
        if sets.find(node) != ground {
            push(
                first_touch[node],
                ViolationKind::Floating { node: name.clone() },
                format!("node `{name}` has no conductive path to ground"),
            );
        } else if degree[node] == 1
            && first_touch[node]
                .map(|i| !net.elements[i].all_nodes().iter().any(|m| m.is_ground()))
                .unwrap_or(false)
        {
            push(
                first_touch[node],
                ViolationKind::Floating { node: name.clone() },
                format!("node `{name}` dangles from a single element terminal"),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes_resolve() {
        let cases = [
            ("332", 332.0),
            ("17.61u", 17.61e-6),
            ("1.598e-18", 1.598e-18),
            ("1.598a", 1.598e-18),
            ("5f", 5e-15),
            ("650p", 650e-12),
            ("10n", 10e-9),
            ("2k", 2e3),
            ("15m", 15e-3),
            ("1meg", 1e6),
            ("1MEG", 1e6),
            ("3M", 3e6),
            ("30g", 30e9),
            ("30G", 30e9),
            ("-2.5e3", -2.5e3),
        ];
        for (text, want) in cases {
            let got = parse_value(text).unwrap();
            assert!((got - want).abs() <= 1e-15 * want.abs(), "{text}: {got} vs {want}");
        }
        assert_eq!(parse_value("3x"), Err(ValueError::UnknownSuffix));
        assert_eq!(parse_value("10nH"), Err(ValueError::UnknownSuffix));
        assert_eq!(parse_value("abc"), Err(ValueError::Malformed));
    }

    #[test]
    fn parses_resistor_to_ground() {
        let net = parse_netlist("R1 a 0 332\n").unwrap();
        let e = &net.elements()[0];
        match e.kind {
            ElementKind::Resistor {
                n1,
                n2,
                ohms,
                noisy,
            } => {
                assert_eq!(net.node_name(n1), "a");
                assert!(n2.is_ground());
                assert_eq!(ohms, 332.0);
                assert!(noisy);
            }
            _ => panic!("expected resistor"),
        }
    }

    #[test]
    fn zero_capacitor_is_rejected() {
        let err = parse_netlist("C0 in 0 0").unwrap_err();
        assert!(matches!(err, ParseError::NonPositive { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn motional_values_parse() {
        let net = parse_netlist("Lm x y 17.61u\nCm y 0 1.598e-18\n").unwrap();
        match (&net.elements()[0].kind, &net.elements()[1].kind) {
            (ElementKind::Inductor { henries, .. }, ElementKind::Capacitor { farads, .. }) => {
                assert!((henries - 1.761e-5).abs() < 1e-18);
                assert_eq!(*farads, 1.598e-18);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_inductor_is_rejected() {
        let err = parse_netlist("L1 a 0 1n\nL1 b 0 2n\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::Duplicate {
                line: 2,
                name: "L1".into()
            }
        );
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_netlist("* header\nR1 a 0\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, .. }));
        let err = parse_netlist("Q1 a b c 1\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, .. }));
        let err = parse_netlist("R1 a 0 1q\n").unwrap_err();
        assert!(matches!(err, ParseError::UnknownSuffix { line: 1, .. }));
    }

    #[test]
    fn comments_title_and_options() {
        let text = "# comment\n.title tank test\n* another\nG1 y 0 x 0 15m gamma=2 noiseless\nV1 x 0 1 90\n.end\nR9 ignored 0 1\n";
        let net = parse_netlist(text).unwrap();
        assert_eq!(net.title, "tank test");
        assert_eq!(net.elements().len(), 2);
        match net.elements()[0].kind {
            ElementKind::Vccs {
                gm, gamma, noisy, ..
            } => {
                assert_eq!(gm, 15e-3);
                assert_eq!(gamma, 2.0);
                assert!(!noisy);
            }
            _ => panic!(),
        }
        match net.elements()[1].kind {
            ElementKind::VSource { phase_deg, .. } => assert_eq!(phase_deg, 90.0),
            _ => panic!(),
        }
    }

    #[test]
    fn gnd_aliases_ground() {
        let net = parse_netlist("R1 a gnd 1\nR2 a GND 1\nR3 a 0 1").unwrap();
        assert_eq!(net.node_count(), 2);
    }

    #[test]
    fn valid_divider_has_no_violations() {
        let net = parse_netlist("V1 in 0 1\nR1 in mid 1k\nL1 mid out 1n\nC1 out 0 1p\n").unwrap();
        assert!(validate_netlist(&net).is_empty());
    }

    #[test]
    fn coupling_out_of_range_is_reported() {
        let net =
            parse_netlist("V1 a 0 1\nL1 a 0 1n\nL2 b 0 1n\nR1 b 0 50\nK1 L1 L2 1.2\n").unwrap();
        let v = validate_netlist(&net);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::CouplingOutOfRange);
        assert_eq!(v[0].element, Some(4));
    }

    #[test]
    fn coupling_reference_errors() {
        let net = parse_netlist("L1 a 0 1n\nR1 a 0 1\nK1 L1 L1 0.5\nK2 L1 R1 0.5\n").unwrap();
        let kinds: Vec<_> = validate_netlist(&net).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::SelfCoupling));
        assert!(kinds.contains(&ViolationKind::MissingInductor { name: "R1".into() }));
    }

    #[test]
    fn dangling_capacitor_node_is_floating() {
        let net = parse_netlist("V1 a 0 1\nR1 a 0 1k\nC1 x a 1p\n").unwrap();
        let v = validate_netlist(&net);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Floating { node: "x".into() });
    }

    #[test]
    fn island_is_floating() {
        let net = parse_netlist("R1 a 0 1k\nR2 x y 1k\nR3 y x 2k\n").unwrap();
        let nodes: Vec<_> = validate_netlist(&net)
            .into_iter()
            .filter_map(|v| match v.kind {
                ViolationKind::Floating { node } => Some(node),
                _ => None,
            })
            .collect();
        assert_eq!(nodes, vec!["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn current_source_alone_does_not_anchor_a_node() {
        let net = parse_netlist("I1 0 a 1\nG1 a 0 a 0 1m\n").unwrap();
        assert!(validate_netlist(&net)
            .iter()
            .any(|v| v.kind == ViolationKind::Floating { node: "a".into() }));
    }

    #[test]
    fn empty_netlist_is_invalid() {
        let v = validate_netlist(&Netlist::new("nothing"));
        assert_eq!(v[0].kind, ViolationKind::Empty);
    }

    #[test]
    fn text_round_trip_is_stable() {
        let text = ".title rt\nR1 a 0 332 noiseless\nC1 a b 1.598e-18\nL1 b 0 17.61u\nL2 c 0 10n\nK1 L1 L2 1\nG1 c 0 a 0 -1e-4 gamma=0.5\nV1 a 0 0.8 30\nI1 0 c 1m\n";
        let first = parse_netlist(text).unwrap();
        let second = parse_netlist(&first.to_text()).unwrap();
        assert_eq!(first, second);
    }
}

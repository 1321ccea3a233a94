//! Graphical notation for FsMPMRS: squares are state configurations,
//! circles are the staged intermediate points inside one maximally parallel
//! step, arrows carry the rule label and its register deltas. The graph is
//! rendered as deterministic DOT text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::engine::walk_state_runs;
use crate::engine::state_configurations;
use crate::error::Result;
use crate::multiset::Multiset;
use crate::system::{FsMpmrsSystem, RuleClass};

/// A circle: the non-register projection of a within-step point, split into
/// the still-unconsumed part and the staged (marked) products.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Circle {
    pub plain: Multiset,
    pub staged: Multiset,
}

impl Circle {
    /// Unmarking: staged products merged back in.
    pub fn unmark(&self) -> Multiset {
        self.plain
            .sum(&self.staged)
            .expect("projection sums stay within u64")
    }

    pub fn label(&self) -> String {
        if self.plain.is_empty() && self.staged.is_empty() {
            return "λ".to_string();
        }
        let mut parts: Vec<String> = Vec::new();
        for (s, n) in self.plain.iter() {
            parts.push(if n == 1 {
                s.to_string()
            } else {
                format!("{s}^{n}")
            });
        }
        for (s, n) in self.staged.iter() {
            parts.push(if n == 1 {
                format!("~{s}")
            } else {
                format!("~{s}^{n}")
            });
        }
        parts.join(" ")
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Endpoint {
    Square(Multiset),
    Circle(Circle),
}

/// A rule arrow. `consumed`/`produced` are the register parts of the rule's
/// sides, rendered beside the arrow with `-`/`+` signs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Arrow {
    pub from: Endpoint,
    pub to: Circle,
    pub rule: String,
    pub consumed: Multiset,
    pub produced: Multiset,
}

impl Arrow {
    pub fn label(&self) -> String {
        let mut ann: Vec<String> = Vec::new();
        for (s, n) in self.consumed.iter() {
            ann.push(if n == 1 {
                format!("-{s}")
            } else {
                format!("-{s}^{n}")
            });
        }
        for (s, n) in self.produced.iter() {
            ann.push(if n == 1 {
                format!("+{s}")
            } else {
                format!("+{s}^{n}")
            });
        }
        if ann.is_empty() {
            self.rule.clone()
        } else {
            format!("{} / {}", self.rule, ann.join(" "))
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FlowGraph {
    pub squares: BTreeSet<Multiset>,
    /// Squares all of whose attached circles rest with respect to pure-state
    /// rules; the others are transient and drawn unfilled.
    pub filled: BTreeSet<Multiset>,
    pub circles: BTreeSet<Circle>,
    pub arrows: BTreeSet<Arrow>,
    /// circle -> the square equal to its unmarking
    pub attachments: BTreeMap<Circle, Multiset>,
}

impl FlowGraph {
    pub fn square_count(&self) -> usize {
        self.squares.len()
    }

    pub fn circle_count(&self) -> usize {
        self.circles.len()
    }

    pub fn arrow_count(&self) -> usize {
        self.arrows.len()
    }
}

/// Builds the flow graph: every state configuration seeds a within-step
/// exploration with padded registers; each staged point becomes a circle
/// attached to the square equal to its unmarking. Sibling rest circles
/// attached to the same square whose incoming annotations match are merged.
pub fn build_flow_graph(fsys: &FsMpmrsSystem, max_iters: usize) -> Result<FlowGraph> {
    let seeds = state_configurations(fsys, max_iters)?;
    let pure_lhs: Vec<Multiset> = fsys
        .base
        .rules
        .iter()
        .filter(|r| fsys.classify_rule(r) == RuleClass::PureState)
        .map(|r| r.lhs.clone())
        .collect();

    let mut circles: BTreeSet<Circle> = BTreeSet::new();
    let mut arrows: BTreeSet<Arrow> = BTreeSet::new();

    for seed in &seeds {
        walk_state_runs(fsys, seed, |edge| {
            let before = Circle {
                plain: fsys.state_projection(edge.before_remaining),
                staged: fsys.state_projection(edge.before_produced),
            };
            let after = Circle {
                plain: fsys.state_projection(edge.after_remaining),
                staged: fsys.state_projection(edge.after_produced),
            };
            let rule = &fsys.base.rules[edge.rule_index];
            let from = if edge.from_start {
                Endpoint::Square(seed.clone())
            } else {
                Endpoint::Circle(before.clone())
            };
            if !edge.from_start {
                circles.insert(before);
            }
            circles.insert(after.clone());
            arrows.insert(Arrow {
                from,
                to: after,
                rule: rule.label.clone(),
                consumed: rule.lhs.project(&fsys.registers),
                produced: rule.rhs.project(&fsys.registers),
            });
        })?;
    }

    // Attachments and the square set (every circle's unmarking is a square).
    let mut squares: BTreeSet<Multiset> = seeds.clone();
    let mut attachments: BTreeMap<Circle, Multiset> = BTreeMap::new();
    for c in &circles {
        let square = c.unmark();
        squares.insert(square.clone());
        attachments.insert(c.clone(), square);
    }

    // Merge sibling rest circles: no outgoing arrows, same square, matching
    // incoming annotations.
    let with_outgoing: BTreeSet<&Circle> = arrows
        .iter()
        .filter_map(|a| match &a.from {
            Endpoint::Circle(c) => Some(c),
            Endpoint::Square(_) => None,
        })
        .collect();
    let mut incoming: BTreeMap<&Circle, BTreeSet<(String, Multiset, Multiset)>> = BTreeMap::new();
    for a in &arrows {
        incoming
            .entry(&a.to)
            .or_default()
            .insert((a.rule.clone(), a.consumed.clone(), a.produced.clone()));
    }
    let mut groups: BTreeMap<(Multiset, Vec<(String, Multiset, Multiset)>), Vec<Circle>> =
        BTreeMap::new();
    for c in &circles {
        if with_outgoing.contains(c) {
            continue;
        }
        let key = (
            attachments[c].clone(),
            incoming
                .get(c)
                .map(|s| s.iter().cloned().collect())
                .unwrap_or_default(),
        );
        groups.entry(key).or_default().push(c.clone());
    }
    let mut replace: BTreeMap<Circle, Circle> = BTreeMap::new();
    for (_, group) in groups {
        if group.len() > 1 {
            let representative = group[0].clone(); // groups are sorted
            for c in group.into_iter().skip(1) {
                replace.insert(c, representative.clone());
            }
        }
    }
    if !replace.is_empty() {
        let remap = |c: &Circle| replace.get(c).cloned().unwrap_or_else(|| c.clone());
        circles = circles.iter().map(&remap).collect();
        arrows = arrows
            .iter()
            .map(|a| Arrow {
                from: match &a.from {
                    Endpoint::Circle(c) => Endpoint::Circle(remap(c)),
                    s => s.clone(),
                },
                to: remap(&a.to),
                rule: a.rule.clone(),
                consumed: a.consumed.clone(),
                produced: a.produced.clone(),
            })
            .collect();
        attachments = attachments
            .into_iter()
            .filter(|(c, _)| !replace.contains_key(c))
            .collect();
    }

    // Filled flag: a square is filled iff every attached circle rests with
    // respect to pure-state rules.
    let rests = |c: &Circle| !pure_lhs.iter().any(|lhs| lhs.is_submultiset(&c.plain));
    let mut filled = squares.clone();
    for (c, square) in &attachments {
        if !rests(c) {
            filled.remove(square);
        }
    }

    Ok(FlowGraph {
        squares,
        filled,
        circles,
        arrows,
        attachments,
    })
}

/// Removes arrows that can never take part in a computation: an arrow out of
/// a circle is dropped when the circle's square differs from its only origin
/// square, and every circle attached to that square is reached from that same
/// origin alone. Runs to a fixed point, so it is idempotent; only edges are
/// removed.
pub fn simplify(g: &FlowGraph) -> FlowGraph {
    let mut out = g.clone();
    loop {
        let origins = circle_origins(&out);
        let mut removable: BTreeSet<Arrow> = BTreeSet::new();
        for arrow in &out.arrows {
            let from_circle = match &arrow.from {
                Endpoint::Circle(c) => c,
                Endpoint::Square(_) => continue,
            };
            let Some(b_square) = out.attachments.get(from_circle) else {
                continue;
            };
            let Some(from_origins) = origins.get(from_circle) else {
                continue;
            };
            if from_origins.len() != 1 {
                continue;
            }
            let origin = from_origins.iter().next().expect("len is 1");
            if origin == b_square {
                continue;
            }
            let all_into_b_from_origin = out
                .attachments
                .iter()
                .filter(|(_, sq)| *sq == b_square)
                .all(|(c, _)| {
                    origins
                        .get(c)
                        .map(|o| o.iter().all(|s| s == origin))
                        .unwrap_or(true)
                });
            if all_into_b_from_origin {
                removable.insert(arrow.clone());
            }
        }
        if removable.is_empty() {
            return out;
        }
        out.arrows = out.arrows.difference(&removable).cloned().collect();
    }
}

fn circle_origins(g: &FlowGraph) -> BTreeMap<Circle, BTreeSet<Multiset>> {
    let mut origins: BTreeMap<Circle, BTreeSet<Multiset>> = BTreeMap::new();
    // seed with square-origin arrows, then propagate along circle arrows
    loop {
        let mut changed = false;
        for a in &g.arrows {
            let new: BTreeSet<Multiset> = match &a.from {
                Endpoint::Square(s) => [s.clone()].into_iter().collect(),
                Endpoint::Circle(c) => origins.get(c).cloned().unwrap_or_default(),
            };
            let entry = origins.entry(a.to.clone()).or_default();
            for s in new {
                if entry.insert(s) {
                    changed = true;
                }
            }
        }
        if !changed {
            return origins;
        }
    }
}

/// Deterministic DOT rendering: squares as boxes (filled per flag), circles
/// as ellipses, rule arrows as labeled directed edges, attachments as dotted
/// headless edges. Byte-identical across invocations.
pub fn emit_graph_text(g: &FlowGraph) -> String {
    let mut out = String::from("digraph mpmrs {\n");
    let mut square_ids: BTreeMap<&Multiset, String> = BTreeMap::new();
    for (i, s) in g.squares.iter().enumerate() {
        square_ids.insert(s, format!("s{i}"));
    }
    let mut circle_ids: BTreeMap<&Circle, String> = BTreeMap::new();
    for (i, c) in g.circles.iter().enumerate() {
        circle_ids.insert(c, format!("c{i}"));
    }
    for (s, id) in &square_ids {
        let style = if g.filled.contains(*s) {
            "filled"
        } else {
            "solid"
        };
        out.push_str(&format!(
            "  {id} [shape=box, style={style}, label=\"{s}\"];\n"
        ));
    }
    for (c, id) in &circle_ids {
        out.push_str(&format!("  {id} [shape=ellipse, label=\"{}\"];\n", c.label()));
    }
    for a in &g.arrows {
        let from = match &a.from {
            Endpoint::Square(s) => &square_ids[s],
            Endpoint::Circle(c) => &circle_ids[c],
        };
        let to = &circle_ids[&a.to];
        out.push_str(&format!("  {from} -> {to} [label=\"{}\"];\n", a.label()));
    }
    for (c, s) in &g.attachments {
        out.push_str(&format!(
            "  {} -> {} [style=dotted, arrowhead=none];\n",
            circle_ids[c], square_ids[s]
        ));
    }
    out.push_str("}\n");
    out
}

impl fmt::Display for FlowGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_graph_text(self))
    }
}

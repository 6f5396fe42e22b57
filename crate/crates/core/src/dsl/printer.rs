use std::fmt::Write;

use super::ast::*;
use crate::expr::display::format_number;

/// Renders a [`SystemFile`] back to `.osys` text that parses to the same tree.
pub fn print(file: &SystemFile) -> String {
    let mut out = String::new();
    for decl in &file.decls {
        print_decl(&mut out, &decl.node);
    }
    out
}

fn print_decl(out: &mut String, decl: &Decl) {
    // writes into a String cannot fail
    let _ = match decl {
        Decl::Param { name, value } => match value {
            Some(v) => writeln!(out, "param {} = {}", name.node, format_number(*v)),
            None => writeln!(out, "param {}", name.node),
        },
        Decl::Space { kind, name, items } => {
            let kw = match kind {
                SpaceKind::Phase => "phase_space",
                SpaceKind::Config => "config_space",
            };
            let _ = writeln!(out, "{kw} {} {{", name.node);
            for item in items {
                let _ = match &item.node {
                    SpaceItem::Pair { q, p, coeff: None } => {
                        writeln!(out, "  pair {} {}", q.node, p.node)
                    }
                    SpaceItem::Pair {
                        q,
                        p,
                        coeff: Some(c),
                    } => writeln!(out, "  pair {} {} coeff {}", q.node, p.node, format_number(*c)),
                    SpaceItem::Coord(c) => writeln!(out, "  coord {}", c.node),
                    SpaceItem::Metric(rows) => {
                        let rows: Vec<String> = rows
                            .iter()
                            .map(|r| {
                                let cells: Vec<String> = r.iter().map(|e| e.node.to_string()).collect();
                                format!("[{}]", cells.join(", "))
                            })
                            .collect();
                        writeln!(out, "  metric [{}]", rows.join(", "))
                    }
                };
            }
            writeln!(out, "}}")
        }
        Decl::Map {
            name,
            source,
            target,
            assignments,
        } => {
            let _ = writeln!(out, "map {} : {} -> {} {{", name.node, source.node, target.node);
            for (lhs, rhs) in assignments {
                let _ = writeln!(out, "  {} = {}", lhs.node, rhs.node);
            }
            writeln!(out, "}}")
        }
        Decl::System {
            kind,
            name,
            left,
            apex,
            right,
            decoration,
        } => {
            let (kw, d) = match kind {
                SystemKind::Hamiltonian => ("ham_system", "H"),
                SystemKind::Lagrangian => ("lag_system", "V"),
            };
            writeln!(
                out,
                "{kw} {} {{\n  span {} {} {} ;\n  {d} = {}\n}}",
                name.node, left.node, apex.node, right.node, decoration.node
            )
        }
        Decl::Compose { name, left, right } => {
            writeln!(out, "compose {} = {} * {}", name.node, left.node, right.node)
        }
        Decl::Tensor { name, left, right } => {
            writeln!(out, "tensor {} = {} + {}", name.node, left.node, right.node)
        }
        Decl::Legendre { name, source } => writeln!(out, "legendre {} = {}", name.node, source.node),
        Decl::Simulate { system, settings } => {
            let _ = writeln!(out, "simulate {} {{", system.node);
            for s in settings {
                let _ = match &s.node {
                    Setting::Dt(v) => writeln!(out, "  dt = {}", format_number(*v)),
                    Setting::TEnd(v) => writeln!(out, "  t_end = {}", format_number(*v)),
                    Setting::Method(m) => writeln!(out, "  method = {}", m.node),
                    Setting::Init(n, v) => writeln!(out, "  init {} = {}", n.node, format_number(*v)),
                    Setting::Monitor(n, e) => writeln!(out, "  monitor {} = {}", n.node, e.node),
                    Setting::Drive(n, e) => writeln!(out, "  drive {} = {}", n.node, e.node),
                };
            }
            writeln!(out, "}}")
        }
    };
}

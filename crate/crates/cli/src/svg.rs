//! Static SVG render of a plan: the arena, targets with labels, color-coded
//! agent paths, and a legend line per agent with its share of the chosen
//! allocation.

use std::fmt::Write;
use teamplan_core::{AgentId, EnvKind, PlanResult, Scenario, Vec2};

const SCALE: f64 = 40.0;
const MARGIN: f64 = 30.0;
const LEGEND_LINE: f64 = 18.0;

/// Human first, robots after; cycles if the team outgrows the palette.
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn color(agent: usize) -> &'static str {
    COLORS[agent % COLORS.len()]
}

struct Frame {
    height: f64,
}

impl Frame {
    /// World y points up; SVG y points down.
    fn at(&self, p: Vec2<f64>) -> (f64, f64) {
        (
            MARGIN + p.x * SCALE,
            MARGIN + (self.height - p.y) * SCALE,
        )
    }
}

fn push_grid(svg: &mut String, scenario: &Scenario<f64>, frame: &Frame) {
    let b = scenario.bounds();
    for x in 0..=(b.max.x as i64) {
        let (x0, y0) = frame.at(Vec2::new(x as f64 - 0.5, b.max.y + 0.5));
        let (_, y1) = frame.at(Vec2::new(x as f64 - 0.5, -0.5));
        let _ = write!(
            svg,
            r##"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{y1:.1}" stroke="#dddddd"/>"##
        );
    }
    for y in 0..=(b.max.y as i64) {
        let (x0, y0) = frame.at(Vec2::new(-0.5, y as f64 - 0.5));
        let (x1, _) = frame.at(Vec2::new(b.max.x + 0.5, y as f64 - 0.5));
        let _ = write!(
            svg,
            r##"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}" stroke="#dddddd"/>"##
        );
    }
    for cell in scenario.obstacles() {
        let (x, y) = frame.at(Vec2::new(cell.x as f64 - 0.5, cell.y as f64 + 0.5));
        let _ = write!(
            svg,
            r##"<rect x="{x:.1}" y="{y:.1}" width="{SCALE:.1}" height="{SCALE:.1}" fill="#444444"/>"##
        );
    }
}

fn path_points(result: &PlanResult<f64>, agent: usize) -> Vec<Vec2<f64>> {
    let mut pts: Vec<Vec2<f64>> = result
        .trajectory
        .steps
        .iter()
        .map(|s| s.state.positions[agent])
        .collect();
    pts.push(result.trajectory.terminal.positions[agent]);
    pts
}

/// Render the plan. The output is a standalone SVG document.
pub fn render(scenario: &Scenario<f64>, result: &PlanResult<f64>) -> String {
    let b = scenario.bounds();
    let pad = if scenario.kind() == EnvKind::GridKitchen {
        0.5
    } else {
        0.0
    };
    let frame = Frame {
        height: b.max.y + pad,
    };
    let width = 2.0 * MARGIN + (b.max.x + 2.0 * pad) * SCALE;
    let legend_height = LEGEND_LINE * (scenario.agent_count() as f64 + 1.0);
    let height = 2.0 * MARGIN + (b.max.y + 2.0 * pad) * SCALE + legend_height;

    let mut svg = String::with_capacity(8192);
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = write!(
        svg,
        r##"<rect width="{width:.0}" height="{height:.0}" fill="#ffffff"/>"##
    );

    match scenario.kind() {
        EnvKind::GridKitchen => push_grid(&mut svg, scenario, &frame),
        EnvKind::PursuitEvasion => {
            let (x, y) = frame.at(Vec2::new(b.min.x, b.max.y));
            let (x1, y1) = frame.at(Vec2::new(b.max.x, b.min.y));
            let _ = write!(
                svg,
                r##"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#999999"/>"##,
                x1 - x,
                y1 - y
            );
        }
    }

    for (t, target) in scenario.targets().iter().enumerate() {
        let (x, y) = frame.at(*target);
        let _ = write!(
            svg,
            r##"<circle cx="{x:.1}" cy="{y:.1}" r="8" fill="none" stroke="#333333" stroke-width="2"/>"##
        );
        let _ = write!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" fill="#333333">{}</text>"##,
            x + 10.0,
            y - 6.0,
            scenario.label(teamplan_core::SubtaskId(t))
        );
    }

    for agent in 0..scenario.agent_count() {
        let pts = path_points(result, agent);
        let line: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = frame.at(*p);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = write!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2.5" stroke-linejoin="round" opacity="0.85"/>"#,
            line.join(" "),
            color(agent)
        );
        let (x, y) = frame.at(pts[0]);
        let _ = write!(
            svg,
            r#"<circle cx="{x:.1}" cy="{y:.1}" r="6" fill="{}"/>"#,
            color(agent)
        );
    }

    // Legend: chosen allocation, one line per agent.
    let legend_top = 2.0 * MARGIN + (b.max.y + 2.0 * pad) * SCALE;
    let _ = write!(
        svg,
        r##"<text x="{MARGIN:.1}" y="{legend_top:.1}" font-family="sans-serif" font-size="13" fill="#000000">{} — allocation #{}</text>"##,
        scenario.id(),
        result.theta_index
    );
    for agent in 0..scenario.agent_count() {
        let subtasks = result.theta.subtasks_of(AgentId(agent));
        let share = if subtasks.is_empty() {
            "(none)".to_string()
        } else {
            subtasks
                .iter()
                .map(|t| scenario.label(*t).to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let who = if agent == 0 {
            "human".to_string()
        } else {
            format!("robot {agent}")
        };
        let y = legend_top + LEGEND_LINE * (agent as f64 + 1.0);
        let _ = write!(
            svg,
            r#"<text x="{MARGIN:.1}" y="{y:.1}" font-family="sans-serif" font-size="13" fill="{}">{who}: {share}</text>"#,
            color(agent)
        );
    }
    svg.push_str("</svg>");
    svg
}

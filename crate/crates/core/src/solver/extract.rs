use crate::error::{check_range, Result};
use crate::model::{Mode, Schedule};
use crate::sim::EmbeddedControl;

/// Rounds the embedded signal to the nearest mode and turns it into a
/// schedule.
///
/// Node values strictly above `threshold` map to mode 1 (a tie rounds down
/// to mode 0). A switch is placed halfway between two consecutive nodes
/// whose rounded modes differ.
pub fn extract_schedule(control: &EmbeddedControl, threshold: f64) -> Result<Schedule> {
    check_range("threshold", threshold, 0.0, 1.0)?;
    let grid = control.grid();
    let nodes = grid.nodes();
    let rounded: Vec<Mode> = control
        .v()
        .iter()
        .map(|&v| if v > threshold { Mode::One } else { Mode::Zero })
        .collect();
    let mut modes = vec![rounded[0]];
    let mut times = Vec::new();
    for k in 1..rounded.len() {
        if rounded[k] != rounded[k - 1] {
            times.push(0.5 * (nodes[k - 1] + nodes[k]));
            modes.push(rounded[k]);
        }
    }
    Schedule::normalize(grid.t0(), grid.tf(), &modes, &times)
}

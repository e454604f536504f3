//! Sweeps random ordinal markets over growing `n` and reports how often the
//! B-optimal stable matching survives a single adjacent preference swap.

use salience_match::experiments::{one_swap_sweep, sweep_csv, SweepMode};

fn main() {
    let rows = one_swap_sweep(&[4, 8, 16, 32, 64, 128], 500, 2024, SweepMode::BOptimal)
        .expect("sweep failed");
    print!("{}", sweep_csv(&rows));
}

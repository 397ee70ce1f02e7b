//! Manufactured-solution study: second order in the time step and
//! exponential decay in the cutoff.

use nlacoustics::properties::MmsStudy;
use nlacoustics::space::BcFamily;
use nlacoustics::verify::rate_table_csv;

fn main() -> nlacoustics::Result<()> {
    for family in [BcFamily::DirDir, BcFamily::NeuDir] {
        let (outcome, dt_table, cutoff_table) = MmsStudy::standard(family, 0.05)?.run()?;
        println!("{}", outcome.line());
        print!("{}", rate_table_csv(&dt_table));
        print!("{}", rate_table_csv(&cutoff_table));
    }
    Ok(())
}

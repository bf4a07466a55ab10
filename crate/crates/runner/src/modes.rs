//! The twenty bivariate mode locations, loaded from a plain-text file and
//! checked against the known mixture moments.

use std::path::Path;

use ram_core::targets::GaussianMixture;

use crate::config::MixtureCase;
use crate::RunnerError;

/// The shipped location file: one `x1 x2` pair per line.
pub const BUNDLED: &str = include_str!("../data/modes.txt");

/// Published moments `(E x1, E x2, E x1², E x2²)` of each case.
pub const TRUTH_A: [f64; 4] = [4.478, 4.905, 25.605, 33.920];
pub const TRUTH_B: [f64; 4] = [4.688, 5.030, 25.558, 31.378];
pub const MOMENT_TOL: f64 = 5e-3;

pub fn parse(text: &str) -> Result<Vec<[f64; 2]>, RunnerError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| RunnerError::ModeFile(format!("line {}: {e}", n + 1)))?;
        match vals[..] {
            [a, b] => out.push([a, b]),
            _ => {
                return Err(RunnerError::ModeFile(format!(
                    "line {}: expected two numbers",
                    n + 1
                )))
            }
        }
    }
    if out.len() != 20 {
        return Err(RunnerError::ModeFile(format!(
            "expected 20 modes, found {}",
            out.len()
        )));
    }
    Ok(out)
}

pub fn truth(case: MixtureCase) -> [f64; 4] {
    match case {
        MixtureCase::A => TRUTH_A,
        MixtureCase::B => TRUTH_B,
    }
}

/// Which of the published moments the location file is checked against.
/// Case (b)'s second moments belong to a narrower mixture (component SD
/// `r/20`) than the one sampled here (variance `r/20`); its first moments
/// agree under either spread.
pub fn checked_moments(case: MixtureCase) -> &'static [usize] {
    match case {
        MixtureCase::A => &[0, 1, 2, 3],
        MixtureCase::B => &[0, 1],
    }
}

/// Closed-form `(E x1, E x2, E x1², E x2²)` of a mixture.
pub fn exact_moments(mix: &GaussianMixture) -> [f64; 4] {
    let m = mix.moments();
    [m.mean[0], m.mean[1], m.second[0], m.second[1]]
}

pub fn mixture(modes: &[[f64; 2]], case: MixtureCase) -> Result<GaussianMixture, RunnerError> {
    Ok(match case {
        MixtureCase::A => GaussianMixture::equal_modes(modes)?,
        MixtureCase::B => GaussianMixture::unequal_modes(modes)?,
    })
}

/// Parses the locations and checks both cases' exact moments.
pub fn load(path: Option<&Path>) -> Result<Vec<[f64; 2]>, RunnerError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)?,
        None => BUNDLED.to_string(),
    };
    let modes = parse(&text)?;
    for case in [MixtureCase::A, MixtureCase::B] {
        let got = exact_moments(&mixture(&modes, case)?);
        let want = truth(case);
        for &i in checked_moments(case) {
            if (got[i] - want[i]).abs() > MOMENT_TOL {
                return Err(RunnerError::ModeFile(format!(
                    "case {case:?} moments {got:?} do not match {:?}",
                    truth(case)
                )));
            }
        }
    }
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_passes() {
        assert_eq!(load(None).unwrap().len(), 20);
    }

    #[test]
    fn a_transcription_error_is_caught() {
        let broken = BUNDLED.replacen("2.18 5.76", "2.81 5.76", 1);
        let modes = parse(&broken).unwrap();
        let dir = std::env::temp_dir().join(format!("ram-modes-{}", std::process::id()));
        std::fs::write(&dir, broken).unwrap();
        assert!(matches!(load(Some(&dir)), Err(RunnerError::ModeFile(_))));
        std::fs::remove_file(&dir).unwrap();
        assert_eq!(modes.len(), 20);
    }

    #[test]
    fn case_b_second_moments_follow_the_sampled_spread() {
        let modes = load(None).unwrap();
        let got = exact_moments(&mixture(&modes, MixtureCase::B).unwrap());
        // adding the component variances r/20 on top of the means' spread
        assert!(
            got[2] > TRUTH_B[2] + 0.05 && got[3] > TRUTH_B[3] + 0.05,
            "{got:?}"
        );
    }

    #[test]
    fn wrong_count_is_rejected() {
        assert!(parse("1 2\n3 4\n").is_err());
    }
}

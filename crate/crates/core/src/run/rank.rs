/// Launcher variables consulted for the process rank, in priority order.
pub const LAUNCHER_RANK_VARS: [&str; 4] = ["SLURM_PROCID", "OMPI_COMM_WORLD_RANK", "RANK", "LOCAL_RANK"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedRank {
    pub rank: u32,
    pub warnings: Vec<String>,
}

/// Explicit rank wins; otherwise the first launcher variable that parses; otherwise 0.
pub fn resolve_rank<K, V>(explicit: Option<u32>, environment: &[(K, V)]) -> ResolvedRank
where
    K: AsRef<str>,
    V: AsRef<str>,
{
    let mut warnings = Vec::new();
    if let Some(rank) = explicit {
        return ResolvedRank { rank, warnings };
    }
    for var in LAUNCHER_RANK_VARS {
        let Some((_, value)) = environment.iter().find(|(k, _)| k.as_ref() == var) else {
            continue;
        };
        match value.as_ref().trim().parse::<u32>() {
            Ok(rank) => return ResolvedRank { rank, warnings },
            Err(_) => warnings.push(format!(
                "ignoring {var}={:?}: not a nonnegative integer",
                value.as_ref()
            )),
        }
    }
    ResolvedRank { rank: 0, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_beats_environment() {
        assert_eq!(resolve_rank(Some(3), &[("RANK", "7")]).rank, 3);
    }

    #[test]
    fn table_of_launcher_environments() {
        type Case<'a> = (&'a [(&'a str, &'a str)], u32, usize);
        let cases: &[Case] = &[
            (&[], 0, 0),
            (&[("SLURM_PROCID", "5")], 5, 0),
            (&[("OMPI_COMM_WORLD_RANK", "2")], 2, 0),
            (&[("LOCAL_RANK", "1"), ("RANK", "9")], 9, 0),
            (&[("RANK", "4"), ("SLURM_PROCID", "6")], 6, 0),
            (&[("SLURM_PROCID", "x"), ("RANK", "3")], 3, 1),
            (&[("RANK", "-1")], 0, 1),
        ];
        for (env, rank, warnings) in cases {
            let resolved = resolve_rank(None, env);
            assert_eq!(resolved.rank, *rank, "{env:?}");
            assert_eq!(resolved.warnings.len(), *warnings, "{env:?}");
        }
    }
}

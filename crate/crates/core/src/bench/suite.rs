//! Flat text description of an experiment suite.
//!
//! ```text
//! # comment
//! trials = 50            # optional defaults for the whole file
//! seed = 1
//!
//! [config semi]          # one block per config; the word after `config` is its name
//! generator = semi       # nonneg | semi | noisy
//! m = 50
//! n = 100
//! r = 10, 40             # a list expands into one config per value, named `semi-r10`, ...
//! k = 20                 # semi only, default r + 10
//! delta = 5              # noisy only, a number >= 0 or `inf`
//! strategies = rd, km, a2, a3
//! checkpoints = 10, 100
//! max_iter = 100         # default: largest checkpoint
//! restarts = 1           # runs of RD and KM per matrix
//! kmeans_max_iter = 100
//! rel_prec = 1e-3
//! ```
//!
//! Every problem in the file is reported at once, one line per offending field.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::runner::{ExperimentConfig, Generator};
use super::NoiseSpec;
use crate::error::{Error, Result};
use crate::init::InitKind;

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub configs: Vec<ExperimentConfig>,
}

/// Built-in suites: the desk-scale one and the full-size one.
pub const PRESETS: [&str; 2] = ["paper-desk", "full"];

const CONFIG_KEYS: [&str; 13] = [
    "name", "generator", "m", "n", "r", "k", "delta", "strategies", "checkpoints", "max_iter", "restarts",
    "kmeans_max_iter", "rel_prec",
];

struct Block {
    line: usize,
    header_name: Option<String>,
    fields: BTreeMap<String, (usize, String)>,
}

pub fn parse_suite(text: &str) -> Result<Suite> {
    let mut problems: Vec<String> = Vec::new();
    let mut top: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut blocks: Vec<Block> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let Some(inner) = inner.strip_suffix(']') else {
                problems.push(format!("line {lineno}: unterminated section header"));
                continue;
            };
            let mut words = inner.split_whitespace();
            if words.next() != Some("config") {
                problems.push(format!("line {lineno}: unknown section '[{inner}]' (expected [config])"));
                continue;
            }
            let name: Vec<&str> = words.collect();
            blocks.push(Block {
                line: lineno,
                header_name: (!name.is_empty()).then(|| name.join(" ")),
                fields: BTreeMap::new(),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            problems.push(format!("line {lineno}: expected 'key = value'"));
            continue;
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        let target = match blocks.last_mut() {
            Some(b) => {
                if !CONFIG_KEYS.contains(&key.as_str()) {
                    problems.push(format!("line {lineno}: field '{key}': unknown config field"));
                    continue;
                }
                &mut b.fields
            }
            None => {
                if key != "trials" && key != "seed" {
                    problems.push(format!("line {lineno}: field '{key}': only 'trials' and 'seed' may precede the first [config]"));
                    continue;
                }
                &mut top
            }
        };
        if let Some((prev, _)) = target.get(&key) {
            problems.push(format!("line {lineno}: field '{key}': duplicate (first set on line {prev})"));
            continue;
        }
        target.insert(key, (lineno, value));
    }

    let trials = top.get("trials").and_then(|(l, v)| match v.parse::<usize>() {
        Ok(t) if t >= 1 => Some(t),
        _ => {
            problems.push(format!("line {l}: field 'trials': expected an integer >= 1, got '{v}'"));
            None
        }
    });
    let seed = top.get("seed").and_then(|(l, v)| {
        v.parse::<u64>()
            .map_err(|_| problems.push(format!("line {l}: field 'seed': expected an unsigned integer, got '{v}'")))
            .ok()
    });

    if blocks.is_empty() && problems.is_empty() {
        problems.push("suite defines no [config] block".into());
    }
    let mut configs = Vec::new();
    for b in &blocks {
        configs.extend(build_block(b, &mut problems));
    }

    problems.sort_by_key(|p| {
        p.strip_prefix("line ").and_then(|r| r.split(':').next()).and_then(|n| n.parse::<usize>().ok())
    });
    if problems.is_empty() {
        Ok(Suite { trials, seed, configs })
    } else {
        Err(Error::arg(format!("invalid suite:\n  {}", problems.join("\n  "))))
    }
}

fn parse_list<T: FromStr>(key: &str, line: usize, value: &str, problems: &mut Vec<String>) -> Option<Vec<T>> {
    let mut out = Vec::new();
    let mut ok = true;
    for item in value.split(',').map(str::trim) {
        match item.parse::<T>() {
            Ok(v) => out.push(v),
            Err(_) => {
                problems.push(format!("line {line}: field '{key}': cannot parse '{item}'"));
                ok = false;
            }
        }
    }
    if out.is_empty() && ok {
        problems.push(format!("line {line}: field '{key}': empty list"));
        ok = false;
    }
    ok.then_some(out)
}

fn build_block(b: &Block, problems: &mut Vec<String>) -> Vec<ExperimentConfig> {
    let before = problems.len();
    let get = |k: &str| b.fields.get(k).map(|(l, v)| (*l, v.as_str()));
    let head = b.line;

    let required_usize = |key: &str, problems: &mut Vec<String>| -> Option<usize> {
        match get(key) {
            None => {
                problems.push(format!("line {head}: field '{key}': missing"));
                None
            }
            Some((l, v)) => match v.parse::<usize>() {
                Ok(x) if x >= 1 => Some(x),
                _ => {
                    problems.push(format!("line {l}: field '{key}': expected an integer >= 1, got '{v}'"));
                    None
                }
            },
        }
    };
    let m = required_usize("m", problems);
    let n = required_usize("n", problems);
    let optional_usize = |key: &str, min: usize, problems: &mut Vec<String>| -> Option<Option<usize>> {
        match get(key) {
            None => Some(None),
            Some((l, v)) => match v.parse::<usize>() {
                Ok(x) if x >= min => Some(Some(x)),
                _ => {
                    problems.push(format!("line {l}: field '{key}': expected an integer >= {min}, got '{v}'"));
                    None
                }
            },
        }
    };

    let ranks: Option<Vec<usize>> = match get("r") {
        None => {
            problems.push(format!("line {head}: field 'r': missing"));
            None
        }
        Some((l, v)) => parse_list::<usize>("r", l, v, problems).and_then(|rs| {
            if rs.contains(&0) {
                problems.push(format!("line {l}: field 'r': ranks must be >= 1"));
                None
            } else {
                Some(rs)
            }
        }),
    };

    let name = match (get("name"), &b.header_name) {
        (Some((l, _)), Some(_)) => {
            problems.push(format!("line {l}: field 'name': already named in the section header"));
            None
        }
        (Some((_, v)), None) => Some(v.to_string()),
        (None, Some(h)) => Some(h.clone()),
        (None, None) => Some(format!("config{head}")),
    };

    let k = optional_usize("k", 1, problems);
    let delta = match get("delta") {
        None => Some(None),
        Some((l, v)) => match NoiseSpec::from_str(v) {
            Ok(d) => Some(Some(d)),
            Err(_) => {
                problems.push(format!("line {l}: field 'delta': expected a number >= 0 or 'inf', got '{v}'"));
                None
            }
        },
    };
    let kind = match get("generator") {
        None => {
            problems.push(format!("line {head}: field 'generator': missing"));
            None
        }
        Some((l, v)) => match v {
            "nonneg" | "semi" | "noisy" => Some((l, v)),
            _ => {
                problems.push(format!("line {l}: field 'generator': expected nonneg, semi or noisy, got '{v}'"));
                None
            }
        },
    };
    if let Some((_, g)) = kind {
        if g != "semi" {
            if let Some((l, _)) = get("k") {
                problems.push(format!("line {l}: field 'k': only used by the semi generator"));
            }
        }
        if g != "noisy" {
            if let Some((l, _)) = get("delta") {
                problems.push(format!("line {l}: field 'delta': only used by the noisy generator"));
            }
        } else if get("delta").is_none() {
            problems.push(format!("line {head}: field 'delta': missing (required by the noisy generator)"));
        }
    }

    let strategies = match get("strategies") {
        None => Some(InitKind::ALL.to_vec()),
        Some((l, v)) => parse_list::<InitKind>("strategies", l, v, problems),
    };
    let checkpoints = match get("checkpoints") {
        None => Some(vec![10, 100]),
        Some((l, v)) => parse_list::<usize>("checkpoints", l, v, problems),
    };
    let max_iter = optional_usize("max_iter", 1, problems);
    let restarts = optional_usize("restarts", 1, problems);
    let kmeans_max_iter = optional_usize("kmeans_max_iter", 1, problems);
    let rel_prec = match get("rel_prec") {
        None => Some(None),
        Some((l, v)) => match v.parse::<f64>() {
            Ok(p) if p > 0.0 && p < 1.0 => Some(Some(p)),
            _ => {
                problems.push(format!("line {l}: field 'rel_prec': expected a number in (0, 1), got '{v}'"));
                None
            }
        },
    };

    if problems.len() > before {
        return Vec::new();
    }
    let (m, n, ranks, name, k, delta, kind, strategies, mut checkpoints) = (
        m.unwrap(),
        n.unwrap(),
        ranks.unwrap(),
        name.unwrap(),
        k.unwrap(),
        delta.unwrap(),
        kind.unwrap().1,
        strategies.unwrap(),
        checkpoints.unwrap(),
    );
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let max_iter = max_iter.unwrap().unwrap_or(*checkpoints.last().unwrap()).max(1);
    if let Some(&c) = checkpoints.iter().find(|&&c| c > max_iter) {
        let l = get("checkpoints").map_or(head, |(l, _)| l);
        problems.push(format!("line {l}: field 'checkpoints': {c} exceeds max_iter = {max_iter}"));
    }

    let q = m.min(n);
    let mut out = Vec::new();
    for &r in &ranks {
        let generator = match kind {
            "nonneg" => Generator::Nonneg,
            "semi" => Generator::Semi { k: k.unwrap_or(r + 10) },
            _ => Generator::Noisy { delta: delta.unwrap() },
        };
        if r > q {
            let l = get("r").map_or(head, |(l, _)| l);
            problems.push(format!("line {l}: field 'r': {r} exceeds min(m, n) = {q}"));
        }
        if let Generator::Semi { k } = generator {
            if k > q {
                let l = get("k").map_or(head, |(l, _)| l);
                problems.push(format!("line {l}: field 'k': {k} (for r = {r}) exceeds min(m, n) = {q}"));
            }
        }
        for s in &strategies {
            if r < s.min_rank() {
                let l = get("strategies").map_or(head, |(l, _)| l);
                problems.push(format!("line {l}: field 'strategies': {s} needs r >= {}, got r = {r}", s.min_rank()));
            }
        }
        let label = if ranks.len() > 1 { format!("{name}-r{r}") } else { name.clone() };
        let mut c = ExperimentConfig::new(label, m, n, r, generator);
        c.strategies = strategies.clone();
        c.checkpoints = checkpoints.clone();
        c.max_iter = max_iter;
        if let Some(x) = restarts.unwrap() {
            c.restarts = x;
        }
        if let Some(x) = kmeans_max_iter.unwrap() {
            c.kmeans_max_iter = x;
        }
        if let Some(x) = rel_prec.unwrap() {
            c.rel_prec = x;
        }
        out.push(c);
    }
    if problems.len() > before { Vec::new() } else { out }
}

fn preset_text(m: usize, n: usize, ranks: &str, trials: usize) -> String {
    let mut s = format!("trials = {trials}\n");
    for (name, gen, extra) in [
        ("nonneg", "nonneg", ""),
        ("semi", "semi", ""),
        ("noisy-5", "noisy", "delta = 5\n"),
        ("noisy-10", "noisy", "delta = 10\n"),
        ("noisy-inf", "noisy", "delta = inf\n"),
    ] {
        s.push_str(&format!(
            "\n[config {name}]\ngenerator = {gen}\nm = {m}\nn = {n}\nr = {ranks}\n{extra}checkpoints = 10, 100\n"
        ));
    }
    s
}

/// `paper-desk`: 50×100 matrices, r ∈ {10, 40}, 50 trials. `full`: 100×200,
/// r ∈ {20, 80}, 500 trials. Both cover the nonnegative, semi-nonnegative
/// (k = r + 10) and noisy (δ ∈ {5, 10, ∞}) generators with all four strategies.
pub fn preset(name: &str) -> Result<Suite> {
    let text = match name {
        "paper-desk" => preset_text(50, 100, "10, 40", 50),
        "full" => preset_text(100, 200, "20, 80", 500),
        other => {
            return Err(Error::arg(format!("unknown preset '{other}' (available: {})", PRESETS.join(", "))));
        }
    };
    parse_suite(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_preset_layout() {
        let s = preset("paper-desk").unwrap();
        assert_eq!(s.trials, Some(50));
        assert_eq!(s.configs.len(), 10);
        let names: Vec<&str> = s.configs.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"semi-r40") && names.contains(&"noisy-inf-r10"));
        let semi = s.configs.iter().find(|c| c.name == "semi-r40").unwrap();
        assert_eq!(semi.generator, Generator::Semi { k: 50 });
        let deltas: Vec<String> = s
            .configs
            .iter()
            .filter_map(|c| match c.generator {
                Generator::Noisy { delta } => Some(delta.to_string()),
                _ => None,
            })
            .collect();
        for d in ["5", "10", "inf"] {
            assert!(deltas.iter().any(|x| x == d));
        }
        assert!(s.configs.iter().all(|c| (c.m, c.n, c.max_iter) == (50, 100, 100)));
        assert_eq!(preset("full").unwrap().configs[0].m, 100);
        assert!(preset("huge").is_err());
    }

    #[test]
    fn parses_full_block() {
        let s = parse_suite(
            "seed = 7\n[config x]\ngenerator = semi\nm = 8\nn = 9 # trailing\nr = 2\nk = 3\nstrategies = a3, RD\ncheckpoints = 5, 2\nmax_iter = 6\nrestarts = 4\nrel_prec = 0.01\n",
        )
        .unwrap();
        assert_eq!(s.seed, Some(7));
        assert_eq!(s.trials, None);
        let c = &s.configs[0];
        assert_eq!((c.name.as_str(), c.m, c.n, c.r), ("x", 8, 9, 2));
        assert_eq!(c.generator, Generator::Semi { k: 3 });
        assert_eq!(c.strategies, vec![InitKind::A3, InitKind::Rd]);
        assert_eq!(c.checkpoints, vec![2, 5]);
        assert_eq!((c.max_iter, c.restarts, c.rel_prec), (6, 4, 0.01));
    }

    #[test]
    fn reports_every_offending_field() {
        let err = parse_suite(
            "trials = 0\nbogus = 1\n[config a]\ngenerator = noisy\nm = x\nn = 10\nr = 5, 20\nk = 3\nstrategies = rd, svd\n[config b]\ngenerator = nonneg\nm = 4\nn = 4\nr = 1\nstrategies = a2\ncolour = red\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        for needle in [
            "field 'trials'",
            "field 'bogus'",
            "field 'm'",
            "field 'k': only used",
            "field 'delta': missing",
            "cannot parse 'svd'",
            "field 'colour'",
        ] {
            assert!(msg.contains(needle), "{needle} missing from:\n{msg}");
        }
        assert!(matches!(err, Error::InvalidArgument(_)));
        let err = parse_suite("[config c]\ngenerator = nonneg\nm = 4\nn = 4\nr = 1\nstrategies = a2\n").unwrap_err();
        assert!(err.to_string().contains("a2 needs r >= 2"));
        let err = parse_suite("[config c]\ngenerator = semi\nm = 4\nn = 6\nr = 2, 5\n").unwrap_err().to_string();
        assert!(err.contains("field 'r': 5 exceeds") && err.contains("field 'k': 12"), "{err}");
    }

    #[test]
    fn rejects_empty_and_duplicates() {
        assert!(parse_suite("# nothing\n").is_err());
        let err = parse_suite("[config a]\ngenerator = nonneg\nm = 3\nm = 4\nn = 4\nr = 1\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        assert!(parse_suite("[config a]\ngenerator = nonneg\nm = 3\nn = 4\nr = 1\ncheckpoints = 10\nmax_iter = 5\n").is_err());
    }
}

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// What produced an output: enough to regenerate it from the same input.
///
/// `args` is the command line minus the program name and minus the thread
/// count, which never changes results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    /// Fully resolved settings, including defaults derived from the data.
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, args: &[String], seed: Option<u64>, config: serde_json::Value) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            schema_version: SCHEMA_VERSION,
            command: command.to_owned(),
            args: portable_args(args),
            seed,
            config,
        }
    }
}

/// A JSON output: schema version and manifest next to the payload fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub manifest: Manifest,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Envelope<T> {
    pub fn new(manifest: Manifest, body: T) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            manifest,
            body,
        }
    }
}

fn portable_args(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip_next = false;
    for a in args {
        if skip_next {
            skip_next = false;
        } else if a == "--threads" {
            skip_next = true;
        } else if !a.starts_with("--threads=") {
            out.push(a.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn thread_flags_are_dropped() {
        let a = strings(&["--threads", "4", "fit", "-i", "x.csv", "--threads=2"]);
        assert_eq!(portable_args(&a), strings(&["fit", "-i", "x.csv"]));
    }

    #[test]
    fn envelope_flattens_the_payload() {
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        struct Body {
            value: f64,
        }
        let env = Envelope::new(
            Manifest::new("fit", &strings(&["fit"]), Some(3), serde_json::json!({"c": 2})),
            Body { value: 0.1 },
        );
        let text = serde_json::to_string(&env).unwrap();
        assert!(text.contains("\"value\":0.1"));
        let back: Envelope<Body> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, env);
    }
}

use forcing_lab::schema::{parse_u64, Schema, SchemaError, Value, SCHEMA_VERSION};

/// What to run and how large. Replaying a manifest reproduces the report
/// byte for byte.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    /// A suite name or `all`.
    pub suite: String,
    pub seed: u64,
    /// Instance counts as a percentage of the acceptance sizes.
    pub scale: u64,
}

impl Manifest {
    pub fn new(suite: &str, seed: u64) -> Self {
        Manifest { suite: suite.to_string(), seed, scale: 100 }
    }

    /// `n` scaled by the manifest, never below one.
    pub fn scaled(&self, n: usize) -> usize {
        scaled(n, self.scale)
    }
}

pub fn scaled(n: usize, scale: u64) -> usize {
    ((n as u128 * scale as u128 / 100) as usize).max(1)
}

fn field<'a>(items: &'a [Value], name: &str) -> Result<Option<&'a Value>, SchemaError> {
    let mut found = None;
    for it in items {
        if it.tag() == Some(name) {
            let body = it.tagged_items(name)?;
            let [v] = body else {
                return Err(SchemaError::Invalid(format!("`{name}` takes one value")));
            };
            if found.replace(v).is_some() {
                return Err(SchemaError::Invalid(format!("`{name}` given twice")));
            }
        }
    }
    Ok(found)
}

impl Schema for Manifest {
    fn to_value(&self) -> Value {
        Value::tagged(
            "manifest",
            [
                Value::tagged("version", [Value::atom(SCHEMA_VERSION.to_string())]),
                Value::tagged("suite", [Value::atom(self.suite.clone())]),
                Value::tagged("seed", [Value::atom(self.seed.to_string())]),
                Value::tagged("scale", [Value::atom(self.scale.to_string())]),
            ],
        )
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let items = v.tagged_items("manifest")?;
        for it in items {
            match it.tag() {
                Some("version" | "suite" | "seed" | "scale") => {}
                _ => return Err(SchemaError::Invalid(format!("unknown manifest entry `{it}`"))),
            }
        }
        if let Some(ver) = field(items, "version")? {
            if parse_u64(ver)? != SCHEMA_VERSION as u64 {
                return Err(SchemaError::Invalid(format!("unsupported schema version {ver}")));
            }
        }
        let suite = match field(items, "suite")? {
            Some(s) => s.as_atom().ok_or_else(|| SchemaError::Invalid("suite must be a name".into()))?.to_string(),
            None => "all".to_string(),
        };
        let seed = field(items, "seed")?.map(parse_u64).transpose()?.unwrap_or(0);
        let scale = field(items, "scale")?.map(parse_u64).transpose()?.unwrap_or(100);
        if scale == 0 {
            return Err(SchemaError::Invalid("scale must be positive".into()));
        }
        Ok(Manifest { suite, seed, scale })
    }
}

/// Fuzzing entry point.
pub fn parse_manifest(s: &str) -> Result<Manifest, SchemaError> {
    Manifest::from_text(s)
}

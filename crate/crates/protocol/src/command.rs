//! Text command grammar: `<vget|vset> /path/segments [args...]`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Get,
    Set,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub verb: Verb,
    pub path: Vec<String>,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CommandError {
    #[error("empty command")]
    Empty,
    #[error("unknown verb '{0}'")]
    UnknownVerb(String),
    #[error("path must start with '/' and have non-empty segments: '{0}'")]
    BadPath(String),
    #[error("command contains control characters")]
    ControlChar,
}

impl Command {
    pub fn parse(text: &str) -> Result<Self, CommandError> {
        if text.chars().any(|c| c.is_control()) {
            return Err(CommandError::ControlChar);
        }
        let mut words = text.split(' ').filter(|w| !w.is_empty());
        let verb = match words.next() {
            None => return Err(CommandError::Empty),
            Some("vget") => Verb::Get,
            Some("vset") => Verb::Set,
            Some(other) => return Err(CommandError::UnknownVerb(other.to_string())),
        };
        let raw = words.next().ok_or_else(|| CommandError::BadPath(String::new()))?;
        let rest = raw.strip_prefix('/').ok_or_else(|| CommandError::BadPath(raw.to_string()))?;
        let path: Vec<String> = rest.split('/').map(str::to_string).collect();
        if path.iter().any(String::is_empty) {
            return Err(CommandError::BadPath(raw.to_string()));
        }
        Ok(Self { verb, path, args: words.map(str::to_string).collect() })
    }

    pub fn path_str(&self) -> String {
        format!("/{}", self.path.join("/"))
    }
}

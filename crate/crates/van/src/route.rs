use serde::{Deserialize, Serialize};

use crate::{Result, VanError};

pub const DEFAULT_MAX_HOPS: u32 = 3;

fn default_max_hops() -> u32 {
    DEFAULT_MAX_HOPS
}

/// Where to relay messages for partners this VAN does not host.
///
/// `pattern` is either an exact partner id or a prefix ending in `*`
/// (`"ACME*"`; a bare `"*"` matches everyone).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InterconnectRoute {
    pub pattern: String,
    pub endpoint: String,
    #[serde(default = "default_max_hops")]
    pub max_hops: u32,
}

impl InterconnectRoute {
    pub fn new(pattern: impl Into<String>, endpoint: impl Into<String>) -> Self {
        Self {
            pattern: pattern.into(),
            endpoint: endpoint.into(),
            max_hops: DEFAULT_MAX_HOPS,
        }
    }

    pub fn with_max_hops(mut self, max_hops: u32) -> Self {
        self.max_hops = max_hops;
        self
    }

    pub fn matches(&self, recipient: &str) -> bool {
        match self.pattern.strip_suffix('*') {
            Some(prefix) => recipient.starts_with(prefix),
            None => recipient == self.pattern,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let stem = self.pattern.strip_suffix('*').unwrap_or(&self.pattern);
        if self.pattern.is_empty() || stem.contains('*') {
            return Err(VanError::InvalidRoute(format!("bad pattern {:?}", self.pattern)));
        }
        if self.endpoint.trim().is_empty() {
            return Err(VanError::InvalidRoute("empty endpoint".into()));
        }
        if self.max_hops == 0 {
            return Err(VanError::InvalidRoute("max_hops must be at least 1".into()));
        }
        Ok(())
    }
}

/// First route in list order that matches.
pub(crate) fn find_route<'a>(routes: &'a [InterconnectRoute], recipient: &str) -> Option<&'a InterconnectRoute> {
    routes.iter().find(|r| r.matches(recipient))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_prefix() {
        let exact = InterconnectRoute::new("SELLER", "http://van2");
        assert!(exact.matches("SELLER"));
        assert!(!exact.matches("SELLER2"));
        let prefix = InterconnectRoute::new("ACME*", "http://van3");
        assert!(prefix.matches("ACME"));
        assert!(prefix.matches("ACME-EU"));
        assert!(!prefix.matches("ACM"));
        assert!(InterconnectRoute::new("*", "http://x").matches("anyone"));
    }

    #[test]
    fn first_match_wins() {
        let routes = vec![
            InterconnectRoute::new("ACME-EU", "http://eu"),
            InterconnectRoute::new("ACME*", "http://us"),
        ];
        assert_eq!(find_route(&routes, "ACME-EU").unwrap().endpoint, "http://eu");
        assert_eq!(find_route(&routes, "ACME-CA").unwrap().endpoint, "http://us");
        assert!(find_route(&routes, "OTHER").is_none());
    }

    #[test]
    fn validation_and_defaults() {
        assert!(InterconnectRoute::new("A*B", "http://x").validate().is_err());
        assert!(InterconnectRoute::new("A", "").validate().is_err());
        assert!(InterconnectRoute::new("A", "http://x").with_max_hops(0).validate().is_err());
        let r: InterconnectRoute = serde_json::from_str(r#"{"pattern":"C","endpoint":"http://v2"}"#).unwrap();
        assert_eq!(r.max_hops, 3);
    }
}

use charkin_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Config,
    Numerical,
    Io,
}

/// A command failure with its exit code and machine-readable detail.
#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
    pub detail: Value,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Config,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Numerical,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Config => 2,
            FailureKind::Numerical | FailureKind::Io => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "status": "error",
            "kind": self.kind,
            "exit_code": self.exit_code(),
            "message": self.message,
        });
        if !self.detail.is_null() {
            v["detail"] = self.detail.clone();
        }
        v
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::OddGridSize(_) => Failure::config("grid.G must be even"),
            Error::MonitorBreach {
                t,
                what,
                value,
                tolerance,
                ..
            } => Failure::numerical(message).with_detail(json!({
                "t": t,
                "monitor": what,
                "value": value,
                "tolerance": tolerance,
            })),
            Error::NonFinite(_) | Error::NotReal(_) => Failure::numerical(message),
            Error::Io(_) => Failure {
                kind: FailureKind::Io,
                message,
                detail: Value::Null,
            },
            _ => Failure::config(message),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::from(Error::Io(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::OddGridSize(3)).exit_code(), 2);
        assert_eq!(Failure::from(Error::NonFinite(0)).exit_code(), 1);
        assert_eq!(
            Failure::from(Error::StepTooLarge {
                dt: 1.0,
                bound: 0.1
            })
            .exit_code(),
            2
        );
        let breach = Failure::from(Error::MonitorBreach {
            t: 0.5,
            what: "normalization drift",
            value: 1e-3,
            tolerance: 1e-6,
            snapshot: None,
        });
        assert_eq!(breach.exit_code(), 1);
        let j = breach.to_json();
        assert_eq!(j["kind"], "numerical");
        assert_eq!(j["detail"]["monitor"], "normalization drift");
        assert_eq!(j["exit_code"], 1);
    }
}

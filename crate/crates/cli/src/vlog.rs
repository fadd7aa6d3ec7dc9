//! Stderr logging gated by the BOXASSORT_LOG environment variable
//! (error | warn | info | debug; default warn).

use std::sync::OnceLock;

#[derive(PartialEq, PartialOrd, Clone, Copy)]
enum Level {
    Error = 0,
    Warn = 1,
    Info = 2,
    Debug = 3,
}

fn level() -> Level {
    static LEVEL: OnceLock<Level> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("BOXASSORT_LOG").as_deref() {
        Ok("error") => Level::Error,
        Ok("info") => Level::Info,
        Ok("debug") => Level::Debug,
        _ => Level::Warn,
    })
}

pub fn warn(msg: impl AsRef<str>) {
    if level() >= Level::Warn {
        eprintln!("warn: {}", msg.as_ref());
    }
}

pub fn info(msg: impl AsRef<str>) {
    if level() >= Level::Info {
        eprintln!("info: {}", msg.as_ref());
    }
}

pub fn debug(msg: impl AsRef<str>) {
    if level() >= Level::Debug {
        eprintln!("debug: {}", msg.as_ref());
    }
}

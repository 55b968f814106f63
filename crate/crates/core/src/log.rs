//! Run logs in the `H:MMMM.m/<message>` elapsed-minutes style.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

pub trait LogSink {
    fn line(&mut self, msg: &str);
}

/// Discards everything.
pub struct NullLog;

impl LogSink for NullLog {
    fn line(&mut self, _: &str) {}
}

impl LogSink for Vec<String> {
    fn line(&mut self, msg: &str) {
        self.push(msg.to_string());
    }
}

/// `value = description`, with the value right-aligned in 8 columns.
pub fn kv(value: impl std::fmt::Display, desc: &str) -> String {
    format!("{value:>8} = {desc}")
}

/// Float with six significant digits, like `%g`.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let digits = v.abs().log10().floor() as i32 + 1;
    if !(-4..=6).contains(&digits) {
        return format!("{v:.3e}");
    }
    let s = format!("{:.*}", (6 - digits).max(0) as usize, v);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `0:0000.0/` prefix for `minutes` of elapsed time.
pub fn prefix(minutes: f64) -> String {
    format!("0:{minutes:06.1}/")
}

/// Writes prefixed lines to the console and optionally to a file.
pub struct TimedLog {
    start: Instant,
    file: Option<(String, BufWriter<File>)>,
    echo: bool,
}

impl TimedLog {
    pub fn new(echo: bool) -> TimedLog {
        TimedLog { start: Instant::now(), file: None, echo }
    }

    /// Also append to `path`, announcing it with the opening banner.
    pub fn with_file(mut self, path: &Path) -> io::Result<TimedLog> {
        let f = File::create(path)?;
        let name = path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        self.file = Some((name.clone(), BufWriter::new(f)));
        self.line(&format!("=============== Logging to: {name} opened ================"));
        Ok(self)
    }

    pub fn minutes(&self) -> f64 {
        self.start.elapsed().as_secs_f64() / 60.0
    }

    pub fn close(mut self) -> io::Result<()> {
        if let Some((name, _)) = &self.file {
            let msg = format!("=============== Logging to: {name} closed ================");
            self.line(&msg);
        }
        if let Some((_, w)) = &mut self.file {
            w.flush()?;
        }
        Ok(())
    }
}

impl LogSink for TimedLog {
    fn line(&mut self, msg: &str) {
        let text = format!("{}{msg}", prefix(self.minutes()));
        if self.echo {
            println!("{text}");
        }
        if let Some((_, w)) = &mut self.file {
            // A failing log file must not abort the computation.
            let _ = writeln!(w, "{text}");
        }
    }
}

//! Process memory sampling.

/// Peak virtual size of this process in bytes, falling back to the peak
/// resident size. `None` where `/proc/self/status` is unavailable.
pub fn peak_memory_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    parse_status(&status, "VmPeak:").or_else(|| parse_status(&status, "VmHWM:"))
}

fn parse_status(status: &str, key: &str) -> Option<u64> {
    let line = status.lines().find(|l| l.starts_with(key))?;
    let mut parts = line[key.len()..].split_whitespace();
    let value: u64 = parts.next()?.parse().ok()?;
    match parts.next() {
        Some("kB") | None => Some(value * 1024),
        Some(_) => None,
    }
}

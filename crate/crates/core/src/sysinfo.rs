//! Machine topology probes (Linux sysfs / procfs). Every probe returns `None`
//! when the information is unavailable; callers then require explicit flags.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

/// Number of hardware threads available to this process.
pub fn hardware_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Total bytes of all distinct caches at `level` across the machine.
pub fn total_cache_bytes(level: u32) -> Option<u64> {
    let cpu_root = Path::new("/sys/devices/system/cpu");
    let mut seen = HashSet::new();
    let mut total = 0u64;
    for cpu in fs::read_dir(cpu_root).ok()?.flatten() {
        let name = cpu.file_name();
        let name = name.to_string_lossy();
        if !name.starts_with("cpu") || !name[3..].chars().all(|c| c.is_ascii_digit()) || name.len() == 3 {
            continue;
        }
        let Ok(entries) = fs::read_dir(cpu.path().join("cache")) else {
            continue;
        };
        for idx in entries.flatten() {
            let p = idx.path();
            let read = |f: &str| fs::read_to_string(p.join(f)).ok().map(|s| s.trim().to_string());
            if read("level").and_then(|l| l.parse::<u32>().ok()) != Some(level) {
                continue;
            }
            if read("type").as_deref() == Some("Instruction") {
                continue;
            }
            let (Some(size), shared) = (read("size").and_then(|s| parse_size(&s)), read("shared_cpu_list")) else {
                continue;
            };
            let key = (shared.unwrap_or_else(|| name.to_string()), read("id"));
            if seen.insert(key) {
                total += size;
            }
        }
    }
    (total > 0).then_some(total)
}

/// Total L3 bytes of the machine.
pub fn l3_bytes() -> Option<u64> {
    total_cache_bytes(3)
}

/// Total L2 + L3 bytes, the default cache budget for PoTra's HDV structures.
pub fn l2_plus_l3_bytes() -> Option<u64> {
    match (total_cache_bytes(2), total_cache_bytes(3)) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(0) + b.unwrap_or(0)),
    }
}

/// `MemAvailable` from `/proc/meminfo`, in bytes.
pub fn available_memory_bytes() -> Option<u64> {
    let info = fs::read_to_string("/proc/meminfo").ok()?;
    info.lines()
        .find_map(|l| l.strip_prefix("MemAvailable:"))
        .and_then(|rest| parse_size(rest.trim()))
}

fn parse_size(s: &str) -> Option<u64> {
    let s = s.trim();
    let digits: String = s.chars().take_while(|c| c.is_ascii_digit()).collect();
    let n: u64 = digits.parse().ok()?;
    let unit = s[digits.len()..].trim().to_ascii_uppercase();
    let mult = match unit.as_str() {
        "" | "B" => 1,
        "K" | "KB" | "KIB" => 1 << 10,
        "M" | "MB" | "MIB" => 1 << 20,
        "G" | "GB" | "GIB" => 1 << 30,
        _ => return None,
    };
    Some(n * mult)
}

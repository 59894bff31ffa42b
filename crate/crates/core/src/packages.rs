//! Script packages shipped with the kernel, resolvable by `#include`.

const SUMMER6: &str = include_str!("../packages/summer6.h");
const SUMMER: &str = include_str!("../packages/summer.h");
const HARMPOL: &str = include_str!("../packages/harmpol.h");

/// Text of a built-in package, looked up after the include path.
pub fn lookup(name: &str) -> Option<&'static str> {
    match name.trim_matches('"') {
        "summer6.h" => Some(SUMMER6),
        "summer.h" => Some(SUMMER),
        "harmpol.h" => Some(HARMPOL),
        _ => None,
    }
}

/// Names of all built-in packages.
pub fn names() -> &'static [&'static str] {
    &["summer6.h", "summer.h", "harmpol.h"]
}

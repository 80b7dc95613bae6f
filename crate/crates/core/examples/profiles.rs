//! Coding tool profiles: hex masks, `off:` lists and custom registries.

use ctp_dse::ctp::{ToolCategory, ToolDescriptor};
use ctp_dse::ToolRegistry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reg = ToolRegistry::vvc_default();
    let anchor = reg.default_ctp();
    println!("{} tools, anchor {}", reg.len(), anchor);

    let no_filters = reg.parse_ctp("off:ALF,CCALF,DBF,SAO,LMCS")?;
    println!("{no_filters}  {}", reg.describe_off(&no_filters)?);
    println!("hamming distance to anchor: {}", anchor.hamming(&no_filters));

    let e1 = reg.parse_ctp("3419DC68")?;
    let enabled: Vec<&str> = e1.enabled().map(|i| reg.tool(i).unwrap().name.as_str()).collect();
    println!("3419DC68 enables {}", enabled.join(","));

    let alf = reg.index_of("ALF").unwrap();
    println!("flip ALF: {}", reg.flip_tool(&anchor, alf)?);

    let custom = ToolRegistry::new(vec![
        ToolDescriptor::new("deblock", ToolCategory::InLoopFilter, true),
        ToolDescriptor::new("sao", ToolCategory::InLoopFilter, true),
        ToolDescriptor::new("affine", ToolCategory::Inter, false),
    ])?;
    print!("custom registry:\n{}", custom.to_canonical_string());
    println!(
        "custom default {} (digest {})",
        custom.default_ctp(),
        &custom.digest()[..12]
    );
    Ok(())
}

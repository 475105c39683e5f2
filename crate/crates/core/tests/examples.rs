// Each example is compiled as a module so its `run` is exercised by `cargo test`.

#[path = "../examples/attention_entropy.rs"]
mod attention_entropy;
#[path = "../examples/base_rope.rs"]
mod base_rope;
#[path = "../examples/dynamic_scaling.rs"]
mod dynamic_scaling;
#[path = "../examples/interpolation_schemes.rs"]
mod interpolation_schemes;
#[path = "../examples/min_distance.rs"]
mod min_distance;
#[path = "../examples/ntk_aware_base.rs"]
mod ntk_aware_base;
#[path = "../examples/ntk_by_parts_ramp.rs"]
mod ntk_by_parts_ramp;
#[path = "../examples/validate_suite.rs"]
mod validate_suite;
#[path = "../examples/yarn_temperature.rs"]
mod yarn_temperature;

#[test]
fn examples_run() {
    base_rope::run().expect("base_rope");
    interpolation_schemes::run().expect("interpolation_schemes");
    ntk_aware_base::run().expect("ntk_aware_base");
    ntk_by_parts_ramp::run().expect("ntk_by_parts_ramp");
    yarn_temperature::run().expect("yarn_temperature");
    dynamic_scaling::run().expect("dynamic_scaling");
    attention_entropy::run().expect("attention_entropy");
    min_distance::run().expect("min_distance");
    validate_suite::run().expect("validate_suite");
}

//! JSON schemas of the subcommand reports.

use serde_json::{json, Value};

fn real() -> Value {
    json!({ "type": ["number", "null"] })
}

fn reals() -> Value {
    json!({ "type": "array", "items": real() })
}

fn axes() -> Value {
    json!({ "type": "array", "items": { "type": "integer", "minimum": 0 } })
}

fn point() -> Value {
    json!({
        "type": "object",
        "required": ["coords"],
        "properties": {
            "coords": { "type": "object", "additionalProperties": real(), "propertyNames": { "pattern": "^[0-9]+$" } }
        }
    })
}

fn support() -> Value {
    json!({
        "type": "object",
        "required": ["k", "a", "b"],
        "properties": {
            "k": { "type": "integer" },
            "a": { "type": "array", "items": axes() },
            "b": { "type": "array", "items": axes() }
        }
    })
}

fn axis_matrix() -> Value {
    json!({
        "type": "object",
        "required": ["axes", "rows"],
        "properties": { "axes": axes(), "rows": { "type": "array", "items": reals() } }
    })
}

fn certificate() -> Value {
    json!({
        "type": "object",
        "required": ["candidate", "stratum", "integral_phi", "residual", "tolerance", "grid_per_dim", "directional", "pass"],
        "properties": {
            "candidate": reals(),
            "stratum": axes(),
            "integral_phi": reals(),
            "residual": real(),
            "tolerance": real(),
            "grid_per_dim": { "type": "integer" },
            "directional": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["tau", "extra", "max_value", "argmax"],
                    "properties": { "tau": axes(), "extra": axes(), "max_value": real(), "argmax": reals() }
                }
            },
            "pass": { "type": "boolean" }
        }
    })
}

fn theta() -> Value {
    json!({
        "type": "object",
        "required": ["tau", "extra", "grid_per_dim", "step", "tolerance", "points", "summary"],
        "properties": {
            "tau": axes(),
            "extra": axes(),
            "grid_per_dim": { "type": "integer" },
            "step": real(),
            "tolerance": real(),
            "points": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": { "angles": reals(), "direction": reals(), "value": real(), "flagged": { "type": "boolean" } }
                }
            },
            "summary": {
                "type": "object",
                "properties": {
                    "kind": { "enum": ["empty", "partial", "full"] },
                    "flagged": { "type": "integer" },
                    "total": { "type": "integer" },
                    "interval": { "type": ["array", "null"], "items": real() },
                    "centroid": { "type": ["array", "null"], "items": real() }
                }
            },
            "contiguous": { "type": "boolean" }
        }
    })
}

fn object(required: &[&str], properties: Value) -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "required": required,
        "properties": properties
    })
}

pub fn validate() -> Value {
    object(
        &["valid"],
        json!({
            "valid": { "type": "boolean" },
            "ambient_dim": { "type": "integer" },
            "max_dim": { "type": "integer" },
            "num_strata": { "type": "integer" },
            "maximal_orthants": { "type": "array", "items": axes() },
            "error": {
                "type": "object",
                "properties": {
                    "kind": { "type": "string" },
                    "message": { "type": "string" },
                    "orthant": { "type": ["array", "null"], "items": { "type": "integer" } }
                }
            }
        }),
    )
}

pub fn geodesic() -> Value {
    object(
        &["support", "length", "breakpoints"],
        json!({
            "support": support(),
            "length": real(),
            "breakpoints": {
                "type": "array",
                "items": { "type": "object", "properties": { "t": real(), "point": point() } }
            },
            "t": real(),
            "point": point(),
            "oracle_length": real()
        }),
    )
}

pub fn logmap() -> Value {
    object(
        &["base_stratum", "phi", "log", "in_d"],
        json!({
            "base_stratum": axes(),
            "phi": reals(),
            "log": reals(),
            "in_d": { "type": "boolean" },
            "direction": { "type": "object", "properties": { "tau": axes(), "unit": reals() } },
            "psi": reals(),
            "psi_support": support(),
            "singular": { "type": "boolean" },
            "matrix": { "type": "array", "items": reals() }
        }),
    )
}

pub fn frechet_mean() -> Value {
    object(
        &["mode", "point", "value", "certificate", "pass"],
        json!({
            "mode": { "enum": ["compute", "verify"] },
            "point": point(),
            "stratum": axes(),
            "value": real(),
            "iterations": { "type": "integer" },
            "certificate": certificate(),
            "theta": theta(),
            "pass": { "type": "boolean" }
        }),
    )
}

pub fn verify_mean() -> Value {
    object(&["point", "pass", "certificate"], json!({ "point": point(), "pass": { "type": "boolean" }, "certificate": certificate() }))
}

pub fn theta_report() -> Value {
    let mut t = theta();
    t["$schema"] = json!("https://json-schema.org/draft/2020-12/schema");
    t
}

pub fn clt_sim() -> Value {
    let piece = json!({
        "type": "object",
        "properties": {
            "tau": axes(),
            "extra": axes(),
            "direction": { "type": ["array", "null"], "items": real() },
            "a": axis_matrix(),
            "v": axis_matrix(),
            "covariance": axis_matrix(),
            "theta": { "oneOf": [theta(), { "type": "null" }] }
        }
    });
    object(
        &["n", "reps", "seed", "x_star", "sigma", "strata", "mean_scaled", "covariance_sigma"],
        json!({
            "n": { "type": "integer" },
            "reps": { "type": "integer" },
            "seed": { "type": "integer" },
            "x_star": point(),
            "sigma": axes(),
            "strata": { "type": "object", "additionalProperties": { "type": "integer" } },
            "mean_scaled": reals(),
            "covariance_sigma": axis_matrix(),
            "draws": { "type": "string" },
            "prediction": {
                "type": "object",
                "properties": {
                    "x_star": reals(),
                    "sigma": axes(),
                    "pieces": { "type": "array", "items": piece },
                    "excluded": { "type": "array", "items": axes() },
                    "certificate": certificate(),
                    "support": {
                        "type": "object",
                        "properties": {
                            "counts": { "type": "object", "additionalProperties": { "type": "integer" } },
                            "inside": { "type": "integer" },
                            "boundary": { "type": "integer" },
                            "violations": { "type": "array", "items": { "type": "integer" } }
                        }
                    },
                    "masses": {
                        "oneOf": [
                            { "type": "array", "items": { "type": "object", "properties": { "tau": axes(), "mass": real(), "error": real() } } },
                            { "type": "object", "properties": { "unavailable": { "type": "string" } } }
                        ]
                    },
                    "preconditions_failed": { "type": "array", "items": { "type": "string" } }
                }
            }
        }),
    )
}

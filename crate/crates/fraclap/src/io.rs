//! File formats: domain specs, OFF meshes, spectrum CSVs and reports.

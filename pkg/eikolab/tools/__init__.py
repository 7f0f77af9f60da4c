# Field generators and numerical diagnostics

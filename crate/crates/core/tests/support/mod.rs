pub mod layout_oracle;

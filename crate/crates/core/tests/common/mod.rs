pub mod oracle;
pub mod table1;

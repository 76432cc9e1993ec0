# Jobs Package

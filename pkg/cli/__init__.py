# Command-line front end

db.Patients.insertOne({_id: "p1", age: 42})
